use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Estimate;
use crate::error::{Error, Result};
use crate::manifold::{ParamMap, ParamScratch};
use crate::metrics::{HomogeneousDistance, NormScratch};
use crate::sampling::{self, label, map_chunks, map_indexed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    /// Σ r_j^N over the cover; an upper proxy of the δ-fine Carathéodory sum.
    pub estimate: Estimate,
    pub centers: usize,
    pub delta: f64,
    /// Largest nearest-neighbour distance in a subsample of the cloud.
    pub spacing: f64,
}

const SPACING_PROBES: usize = 256;

/// Greedy farthest-point cover of a jittered-grid cloud of Ψ(region) by
/// closed balls of radius ≤ δ/2; each ball shrinks to its farthest assigned
/// point plus half the cloud spacing.
pub fn covering_estimate(
    map: &ParamMap,
    d: &HomogeneousDistance,
    region: &[[f64; 2]],
    degree: usize,
    delta: f64,
    cloud_size: usize,
    seed: u64,
) -> Result<CoveringReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    if region.len() != map.n() {
        return Err(Error::ArityError(format!("region needs {} intervals", map.n())));
    }
    let empty = region.iter().any(|[lo, hi]| !(hi > lo));
    if empty || cloud_size == 0 {
        let mut e = Estimate::exact(0.0, "greedy-cover");
        e.seed = seed;
        return Ok(CoveringReport { estimate: e, centers: 0, delta, spacing: 0.0 });
    }
    let q = map.group().dim();
    let n = map.n();
    // Jittered grid: one point per cell of a k^n grid over the region.
    let k = ((cloud_size as f64).powf(1.0 / n as f64).floor() as usize).max(1);
    let cloud_size = k.pow(n as u32);
    let task = label("covering_estimate");
    let chunks = map_chunks(cloud_size, |c, range| -> Result<Vec<Vec<f64>>> {
        let mut rng = sampling::stream(seed, &[task, c as u64]);
        let mut s = ParamScratch::default();
        let mut out = Vec::with_capacity(range.len());
        for idx in range {
            let mut rem = idx;
            let y: Vec<f64> = region
                .iter()
                .map(|[lo, hi]| {
                    let i = rem % k;
                    rem /= k;
                    lo + (hi - lo) * (i as f64 + rng.random::<f64>()) / k as f64
                })
                .collect();
            if !map.contains(&y) {
                return Err(Error::DomainViolation(format!("{y:?} outside the parameter domain")));
            }
            let mut x = vec![0.0; q];
            map.eval_into(&y, &mut x, &mut s)?;
            out.push(x);
        }
        Ok(out)
    });
    let mut cloud = Vec::with_capacity(cloud_size);
    for c in chunks {
        cloud.extend(c?);
    }

    let group = d.group();
    let dist = |a: &[f64], b: &[f64], s: &mut NormScratch| -> f64 {
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        d.norm_with(&group.mul(&neg, b), s)
    };

    let probes = SPACING_PROBES.min(cloud.len());
    let nearest = map_indexed(probes, |i| {
        let mut s = NormScratch::default();
        let a = &cloud[i * cloud.len() / probes];
        cloud
            .iter()
            .filter(|b| !std::ptr::eq(*b, a))
            .map(|b| dist(a, b, &mut s))
            .fold(f64::INFINITY, f64::min)
    });
    let spacing = nearest.into_iter().filter(|v| v.is_finite()).fold(0.0, f64::max);
    if spacing > delta / 4.0 {
        return Err(Error::CloudTooSparse { spacing, limit: delta / 4.0 });
    }

    // Radii are padded by half the spacing so the balls cover Ψ(region) and
    // not only the cloud; the greedy threshold leaves room for the pad.
    let pad = spacing / 2.0;
    let half = delta / 2.0 - pad;
    let mut owner = vec![0usize; cloud.len()];
    let mut gap: Vec<f64> = {
        let c0 = &cloud[0];
        map_indexed(cloud.len(), |i| dist(c0, &cloud[i], &mut NormScratch::default()))
    };
    let mut centers = vec![0usize];
    loop {
        let (far, far_gap) = gap
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &g)| if g > acc.1 { (i, g) } else { acc });
        if far_gap <= half {
            break;
        }
        let k = centers.len();
        centers.push(far);
        let c = &cloud[far];
        let updated = map_indexed(cloud.len(), |i| dist(c, &cloud[i], &mut NormScratch::default()));
        for (i, v) in updated.into_iter().enumerate() {
            if v < gap[i] {
                gap[i] = v;
                owner[i] = k;
            }
        }
    }
    let mut radii = vec![pad; centers.len()];
    for (i, &o) in owner.iter().enumerate() {
        radii[o] = radii[o].max(gap[i] + pad);
    }
    let value: f64 = radii.iter().map(|r| r.powi(degree as i32)).sum();
    Ok(CoveringReport {
        estimate: Estimate {
            value,
            stderr: 0.0,
            samples: cloud_size as u64,
            seed,
            method: "greedy-cover".into(),
        },
        centers: centers.len(),
        delta,
        spacing,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebra::catalog;
    use crate::metrics::DistanceKind;

    #[test]
    fn horizontal_segment() {
        let g = Arc::new(catalog::heisenberg(1).unwrap());
        let d = HomogeneousDistance::new(g.clone(), DistanceKind::Box { eps: vec![1.0, 1.0] }).unwrap();
        let m = ParamMap::parse(g, "y1; 0; 0", 1, &[[0.0, 1.0]]).unwrap();
        let r = covering_estimate(&m, &d, &[[0.0, 1.0]], 1, 0.01, 4000, 5).unwrap();
        // Balls of radius δ/2 cover arcs of length δ: the sum is L/2 = L/β.
        let scaled = 2.0 * r.estimate.value;
        assert!((1.0..=1.1).contains(&scaled), "{r:?}");
        let empty = covering_estimate(&m, &d, &[[0.5, 0.5]], 1, 0.01, 100, 5).unwrap();
        assert_eq!(empty.estimate.value, 0.0);
        assert!(matches!(
            covering_estimate(&m, &d, &[[0.0, 1.0]], 1, 0.01, 50, 5),
            Err(Error::CloudTooSparse { .. })
        ));
    }
}
