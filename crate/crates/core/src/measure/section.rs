use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::optimize::nelder_mead;
use super::Estimate;
use crate::algebra::{Scratch, Subspace};
use crate::error::{Error, Result};
use crate::metrics::{Convexity, HomogeneousDistance, NormScratch};
use crate::numeric::unit_ball_volume;
use crate::sampling::{self, derive, label, map_chunks};

/// Hit count of B(u,1) ∩ S among uniform points of the R-ball of S.
pub(crate) fn section_hits(
    d: &HomogeneousDistance,
    basis: &DMatrix<f64>,
    u: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> u64 {
    let group = d.group();
    let q = group.dim();
    let n = basis.ncols();
    let neg_u: Vec<f64> = u.iter().map(|v| -v).collect();
    let task = label("section_area");
    map_chunks(samples, |c, range| {
        let mut rng = sampling::stream(seed, &[task, c as u64]);
        let mut scratch = NormScratch::default();
        let mut gs = Scratch::default();
        let mut coords = vec![0.0; n];
        let mut x = vec![0.0; q];
        let mut point = vec![0.0; q];
        let mut hits = 0u64;
        for _ in range {
            sampling::unit_ball_point(&mut rng, &mut coords);
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = radius * (0..n).map(|k| basis[(i, k)] * coords[k]).sum::<f64>();
            }
            group.mul_into(&neg_u, &x, &mut point, &mut gs);
            if d.in_ball(&point, 1.0, &mut scratch) {
                hits += 1;
            }
        }
        hits
    })
    .into_iter()
    .sum()
}

fn check_point(d: &HomogeneousDistance, s: &Subspace, u: &[f64]) -> Result<()> {
    let q = d.group().dim();
    if u.len() != q || s.ambient_dim() != q {
        return Err(Error::BadDimensions(format!(
            "center has {} coordinates and the subspace lives in R^{}, group dimension {q}",
            u.len(),
            s.ambient_dim()
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of the Euclidean n-area of B(u,1) ∩ S.
pub fn section_area(d: &HomogeneousDistance, s: &Subspace, u: &[f64], samples: usize, seed: u64) -> Result<Estimate> {
    check_point(d, s, u)?;
    let basis = s.orthonormal();
    section_area_in(d, &basis, u, samples, seed)
}

pub(crate) fn section_area_in(
    d: &HomogeneousDistance,
    basis: &DMatrix<f64>,
    u: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    let radius = match d.section_radius(basis, u) {
        Ok(r) => r,
        Err(Error::EmptySection) => {
            let mut e = Estimate::exact(0.0, "empty-section");
            e.seed = seed;
            return Ok(e);
        }
        Err(e) => return Err(e),
    };
    let n = basis.ncols();
    let volume = unit_ball_volume(n) * radius.powi(n as i32);
    let hits = section_hits(d, basis, u, radius, samples, seed);
    Ok(Estimate::hit_or_miss(volume, hits, samples as u64, seed, "monte-carlo"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BetaOptions {
    pub starts: usize,
    pub refine_iters: usize,
    pub samples: usize,
    pub seed: u64,
    /// Search over centers even when a shortcut applies.
    pub force_search: bool,
}

impl Default for BetaOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            refine_iters: 60,
            samples: 200_000,
            seed: 0,
            force_search: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalFactor {
    pub estimate: Estimate,
    /// Center achieving the reported value.
    pub argmax: Vec<f64>,
    /// Section area at u = 0 (independent draw).
    pub origin: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shortcut: Option<String>,
}

/// Reason why the maximum over centers sits at u = 0, if one is known.
fn shortcut_reason(d: &HomogeneousDistance, s: &Subspace) -> Option<&'static str> {
    let group = d.group();
    let class = s.classify(group, 1e-9);
    if d.convexity() == Convexity::Convex && class.vertical {
        Some("convex unit ball and vertical subgroup")
    } else if d.is_multiradial() && class.horizontal && class.subalgebra {
        Some("multiradial distance and horizontal subgroup")
    } else if d.is_multiradial() && group.step() == 2 && class.homogeneous {
        Some("multiradial distance on a step-two group")
    } else {
        None
    }
}

/// max over ‖u‖ ≤ 1 of the n-area of B(u,1) ∩ S.
pub fn spherical_factor(d: &HomogeneousDistance, s: &Subspace, opts: &BetaOptions) -> Result<SphericalFactor> {
    let group = d.group();
    let q = group.dim();
    check_point(d, s, &vec![0.0; q])?;
    if opts.samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let basis = s.orthonormal();
    let zero = vec![0.0; q];
    let origin = section_area_in(d, &basis, &zero, opts.samples, derive(opts.seed, &[label("origin")]))?;
    let shortcut = if opts.force_search { None } else { shortcut_reason(d, s) };
    if let Some(reason) = shortcut {
        let mut estimate = origin.clone();
        estimate.method = "theorem-shortcut".into();
        return Ok(SphericalFactor {
            estimate,
            argmax: zero,
            origin,
            shortcut: Some(reason.to_string()),
        });
    }

    // Every section B(u,1) ∩ S with ‖u‖ ≤ 1 lies in the norm-2 ball.
    let n = basis.ncols();
    let radius = d.global_radius(2.0);
    let volume = unit_ball_volume(n) * radius.powi(n as i32);
    let search_samples = (opts.samples / 8).max(4096);
    let search_seed = derive(opts.seed, &[label("search")]);
    let mut scratch = NormScratch::default();
    let project = |u: &[f64], scratch: &mut NormScratch| -> Vec<f64> {
        let nu = d.norm_with(u, scratch);
        if nu > 1.0 {
            group.dilate_unchecked(1.0 / nu, u)
        } else {
            u.to_vec()
        }
    };
    // Common random numbers: every center sees the same sample points.
    let objective = |u: &[f64]| -> f64 {
        let u = project(u, &mut NormScratch::default());
        volume * section_hits(d, &basis, &u, radius, search_samples, search_seed) as f64 / search_samples as f64
    };

    let mut rng = sampling::stream(opts.seed, &[label("starts")]);
    let mut starts: Vec<(Vec<f64>, f64)> = vec![(zero.clone(), objective(&zero))];
    for _ in 1..opts.starts.max(1) {
        let unit = d.random_unit_point(&mut rng, &mut scratch);
        let r: f64 = rng.random::<f64>();
        let u = group.dilate_unchecked(r, &unit);
        let v = objective(&u);
        starts.push((u, v));
    }
    starts.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut best = starts[0].clone();
    for (u, _) in starts.iter().take(3) {
        let (x, v) = nelder_mead(|p| -objective(p), u, 0.2, opts.refine_iters);
        if -v > best.1 {
            best = (project(&x, &mut scratch), -v);
        }
    }
    let argmax = project(&best.0, &mut scratch);
    let refined = section_area_in(d, &basis, &argmax, opts.samples, derive(opts.seed, &[label("refined")]))?;
    let (mut estimate, argmax) = if refined.value >= origin.value {
        (refined, argmax)
    } else {
        (origin.clone(), zero)
    };
    estimate.method = "optimized".into();
    Ok(SphericalFactor {
        estimate,
        argmax,
        origin,
        shortcut: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaConstancyReport {
    pub estimates: Vec<Estimate>,
    /// max − min of the estimated values.
    pub spread: f64,
    pub max_pairwise_z: f64,
    pub passed: bool,
}

/// Spherical factors across a family of subspaces of equal dimension; passes
/// when every pair agrees within 3 combined standard errors.
pub fn beta_constancy_check(
    d: &HomogeneousDistance,
    family: &[Subspace],
    opts: &BetaOptions,
) -> Result<BetaConstancyReport> {
    let Some(first) = family.first() else {
        return Err(Error::InvalidArgument("empty subspace family".into()));
    };
    if family.iter().any(|s| s.dim() != first.dim()) {
        return Err(Error::InvalidArgument("family members differ in dimension".into()));
    }
    let mut estimates = Vec::with_capacity(family.len());
    for (i, s) in family.iter().enumerate() {
        let member = BetaOptions {
            seed: derive(opts.seed, &[label("member"), i as u64]),
            ..opts.clone()
        };
        estimates.push(spherical_factor(d, s, &member)?.estimate);
    }
    let mut max_z: f64 = 0.0;
    for i in 0..estimates.len() {
        for j in i + 1..estimates.len() {
            max_z = max_z.max(estimates[i].z_score(&estimates[j]));
        }
    }
    let lo = estimates.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let hi = estimates.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    Ok(BetaConstancyReport {
        estimates,
        spread: hi - lo,
        max_pairwise_z: max_z,
        passed: max_z <= 3.0,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::algebra::catalog;
    use crate::metrics::DistanceKind;

    fn h1_box(eps2: f64) -> HomogeneousDistance {
        HomogeneousDistance::new(Arc::new(catalog::heisenberg(1).unwrap()), DistanceKind::Box { eps: vec![1.0, eps2] })
            .unwrap()
    }

    #[test]
    fn euclidean_plane_area_is_pi() {
        let g = Arc::new(catalog::abelian(3).unwrap());
        let d = HomogeneousDistance::new(g.clone(), DistanceKind::EuclideanBall { radius: 1.0 }).unwrap();
        let s = Subspace::new(&g, DMatrix::from_column_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, 1.0, -1.0])).unwrap();
        let e = section_area(&d, &s, &[0.0; 3], 100_000, 3).unwrap();
        assert!((e.value - PI).abs() <= 3.0 * e.stderr, "{e:?}");
        let beta = spherical_factor(&d, &s, &BetaOptions { samples: 50_000, ..Default::default() }).unwrap();
        assert_eq!(beta.estimate.method, "theorem-shortcut");
    }

    #[test]
    fn box_vertical_section() {
        let d = h1_box(1.2);
        let g = d.group().clone();
        let s = Subspace::coordinate(&g, &[0, 2]).unwrap();
        let exact = 4.0 / 1.44;
        let e = section_area(&d, &s, &[0.0; 3], 100_000, 9).unwrap();
        assert!((e.value - exact).abs() <= 3.0 * e.stderr, "{e:?}");
        let far = section_area(&d, &s, &[0.0, 5.0, 0.0], 10_000, 9).unwrap();
        assert_eq!(far.value, 0.0);
    }

    #[test]
    fn search_does_not_beat_the_origin_for_convex_balls() {
        let d = h1_box(1.0);
        let g = d.group().clone();
        let s = Subspace::coordinate(&g, &[1, 2]).unwrap();
        let opts = BetaOptions {
            samples: 100_000,
            force_search: true,
            starts: 8,
            refine_iters: 30,
            seed: 4,
        };
        let b = spherical_factor(&d, &s, &opts).unwrap();
        assert_eq!(b.estimate.method, "optimized");
        assert!(b.estimate.z_score(&b.origin) <= 3.0, "{b:?}");
        assert!((b.origin.value - 4.0).abs() <= 3.0 * b.origin.stderr);
    }

    #[test]
    fn stderr_scales_with_samples() {
        let d = h1_box(1.0);
        let s = Subspace::coordinate(d.group(), &[0, 2]).unwrap();
        let a = section_area(&d, &s, &[0.0; 3], 20_000, 1).unwrap();
        let b = section_area(&d, &s, &[0.0; 3], 40_000, 1).unwrap();
        let ratio = b.stderr / a.stderr;
        assert!((ratio / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.25, "{ratio}");
    }

    #[test]
    fn vertical_family_is_constant() {
        let d = h1_box(1.0);
        let g = d.group().clone();
        let family: Vec<Subspace> = [0.1, 0.9, 2.0, 2.7]
            .iter()
            .map(|phi: &f64| {
                Subspace::new(&g, DMatrix::from_column_slice(3, 2, &[phi.cos(), phi.sin(), 0.0, 0.0, 0.0, 1.0]))
                    .unwrap()
            })
            .collect();
        let r = beta_constancy_check(&d, &family, &BetaOptions { samples: 50_000, ..Default::default() }).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
