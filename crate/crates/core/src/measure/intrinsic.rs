use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Estimate;
use crate::error::{Error, Result};
use crate::manifold::{ParamMap, ParamScratch};
use crate::numeric::{kernel, Policy};
use crate::sampling::{self, label, map_chunks, map_indexed};

/// Pointwise intrinsic density y ↦ ‖π_N(∂_1Ψ ∧ ⋯ ∧ ∂_nΨ)‖ in the
/// orthonormal frame, evaluated through the degree-N minors of the
/// frame-coefficient matrix.
#[derive(Debug, Clone)]
pub struct IntrinsicDensity<'a> {
    map: &'a ParamMap,
    degree: usize,
    subsets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Default)]
pub struct DensityScratch {
    param: ParamScratch,
    jac: DMatrix<f64>,
    coeffs: DMatrix<f64>,
    minor: DMatrix<f64>,
    col: Vec<f64>,
}

fn subsets_of_degree(degrees: &[usize], n: usize, target: usize) -> Vec<Vec<usize>> {
    fn rec(degrees: &[usize], start: usize, left: usize, sum: usize, target: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            if sum == target {
                out.push(cur.clone());
            }
            return;
        }
        for i in start..=degrees.len() - left {
            if sum + degrees[i] > target {
                continue;
            }
            cur.push(i);
            rec(degrees, i + 1, left - 1, sum + degrees[i], target, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(degrees, 0, n, 0, target, &mut Vec::new(), &mut out);
    out
}

impl<'a> IntrinsicDensity<'a> {
    pub fn new(map: &'a ParamMap, degree: usize) -> Self {
        let subsets = subsets_of_degree(map.group().degrees(), map.n(), degree);
        Self { map, degree, subsets }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn map(&self) -> &ParamMap {
        self.map
    }

    /// Writes Ψ(y) into `point` and returns the density at y (no domain check).
    pub fn eval_into(&self, y: &[f64], point: &mut [f64], s: &mut DensityScratch) -> Result<f64> {
        let g = self.map.group();
        let (q, n) = (g.dim(), self.map.n());
        if s.jac.shape() != (q, n) {
            s.jac = DMatrix::zeros(q, n);
            s.coeffs = DMatrix::zeros(q, n);
            s.minor = DMatrix::zeros(n, n);
        }
        self.map.eval_jacobian_into(y, point, &mut s.jac, &mut s.param)?;
        let frame = g.left_invariant_frame(point);
        for k in 0..n {
            s.col.clear();
            s.col.extend(s.jac.column(k).iter());
            let c = g.solve_frame(&frame, &s.col);
            s.coeffs.set_column(k, &nalgebra::DVector::from_vec(c));
        }
        let mut sum = 0.0;
        for rows in &self.subsets {
            let det = match n {
                1 => s.coeffs[(rows[0], 0)],
                2 => {
                    let c = &s.coeffs;
                    c[(rows[0], 0)] * c[(rows[1], 1)] - c[(rows[0], 1)] * c[(rows[1], 0)]
                }
                _ => {
                    for (r, &i) in rows.iter().enumerate() {
                        for k in 0..n {
                            s.minor[(r, k)] = s.coeffs[(i, k)];
                        }
                    }
                    s.minor.clone().determinant()
                }
            };
            sum += det * det;
        }
        Ok(sum.sqrt())
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        if !self.map.contains(y) {
            return Err(Error::DomainViolation(format!("{y:?} outside the parameter domain")));
        }
        let mut point = vec![0.0; self.map.group().dim()];
        self.eval_into(y, &mut point, &mut DensityScratch::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Quadrature {
    /// Midpoint rule with `resolution` cells per axis, plus one halving for
    /// a Richardson correction and error estimate.
    TensorGrid { resolution: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

fn check_region(map: &ParamMap, region: &[[f64; 2]]) -> Result<()> {
    if region.len() != map.n() {
        return Err(Error::ArityError(format!(
            "region has {} intervals for {} parameters",
            region.len(),
            map.n()
        )));
    }
    for ([lo, hi], [dlo, dhi]) in region.iter().zip(map.domain()) {
        if !(lo <= hi) || *lo < *dlo || *hi > *dhi {
            return Err(Error::DomainViolation(format!(
                "region interval [{lo}, {hi}] not inside [{dlo}, {dhi}]"
            )));
        }
    }
    Ok(())
}

/// Largest pointwise degree at the nodes of a small grid over `region`.
pub(crate) fn region_degree(map: &ParamMap, region: &[[f64; 2]], policy: &Policy) -> Result<usize> {
    let n = map.n();
    let per_axis = ((2000f64).powf(1.0 / n as f64).floor() as usize).clamp(2, 9);
    let total = per_axis.pow(n as u32);
    let degrees = map_indexed(total, |idx| {
        let mut k = idx;
        let y: Vec<f64> = region
            .iter()
            .map(|[lo, hi]| {
                let i = k % per_axis;
                k /= per_axis;
                lo + (hi - lo) * (i as f64 + 0.5) / per_axis as f64
            })
            .collect();
        map.pointwise_degree(&y, policy)
    });
    let mut best = 0;
    for d in degrees {
        best = best.max(d?);
    }
    Ok(best)
}

type Weight<'w> = Option<&'w (dyn Fn(&[f64]) -> f64 + Sync)>;

fn midpoint(density: &IntrinsicDensity, region: &[[f64; 2]], cells: usize, weight: Weight) -> Result<f64> {
    let n = region.len();
    let total = cells.pow(n as u32);
    let q = density.map().group().dim();
    let cell_volume: f64 = region.iter().map(|[lo, hi]| (hi - lo) / cells as f64).product();
    let parts = map_chunks(total, |_, range| -> Result<f64> {
        let mut s = DensityScratch::default();
        let mut point = vec![0.0; q];
        let mut y = vec![0.0; n];
        let mut acc = 0.0;
        for idx in range {
            let mut k = idx;
            for (yi, [lo, hi]) in y.iter_mut().zip(region) {
                *yi = lo + (hi - lo) * ((k % cells) as f64 + 0.5) / cells as f64;
                k /= cells;
            }
            let rho = density.eval_into(&y, &mut point, &mut s)?;
            acc += rho * weight.map_or(1.0, |w| w(&point));
        }
        Ok(acc)
    });
    let mut sum = 0.0;
    for p in parts {
        sum += p?;
    }
    Ok(sum * cell_volume)
}

/// μ_Σ(Ψ(region)) = ∫_region w(Ψ(y)) ‖π_N(∂_1Ψ ∧ ⋯ ∧ ∂_nΨ)‖ dy, with N the
/// given degree or the largest degree sampled on the region.
pub fn intrinsic_measure(
    map: &ParamMap,
    region: &[[f64; 2]],
    quadrature: Quadrature,
    degree: Option<usize>,
    weight: Weight,
    policy: &Policy,
) -> Result<Estimate> {
    check_region(map, region)?;
    let degree = match degree {
        Some(d) => d,
        None => region_degree(map, region, policy)?,
    };
    let density = IntrinsicDensity::new(map, degree);
    match quadrature {
        Quadrature::TensorGrid { resolution } => {
            if resolution == 0 {
                return Err(Error::InvalidArgument("resolution must be positive".into()));
            }
            let coarse = midpoint(&density, region, resolution, weight)?;
            let fine = midpoint(&density, region, 2 * resolution, weight)?;
            let samples = (resolution.pow(map.n() as u32) * (1 + (1 << map.n()))) as u64;
            Ok(Estimate {
                value: (4.0 * fine - coarse) / 3.0,
                stderr: (fine - coarse).abs() / 3.0,
                samples,
                seed: 0,
                method: "midpoint-richardson".into(),
            })
        }
        Quadrature::MonteCarlo { samples, seed } => {
            let n = map.n();
            let q = map.group().dim();
            let volume: f64 = region.iter().map(|[lo, hi]| hi - lo).product();
            let task = label("intrinsic_measure");
            let parts = map_chunks(samples, |c, range| -> Result<(f64, f64)> {
                let mut rng = sampling::stream(seed, &[task, c as u64]);
                let mut s = DensityScratch::default();
                let mut point = vec![0.0; q];
                let mut y = vec![0.0; n];
                let (mut sum, mut sq) = (0.0, 0.0);
                for _ in range {
                    for (yi, [lo, hi]) in y.iter_mut().zip(region) {
                        *yi = lo + (hi - lo) * rng.random::<f64>();
                    }
                    let v = volume * density.eval_into(&y, &mut point, &mut s)? * weight.map_or(1.0, |w| w(&point));
                    sum += v;
                    sq += v * v;
                }
                Ok((sum, sq))
            });
            let (mut sum, mut sq) = (0.0, 0.0);
            for p in parts {
                let (a, b) = p?;
                sum += a;
                sq += b;
            }
            Ok(Estimate::from_sums(sum, sq, samples as u64, seed, "monte-carlo"))
        }
    }
}

/// Horizontal normal density of a hypersurface at Ψ(y):
/// sqrt(Σ_{j ≤ m} ⟨ν, X_j⟩²) for the Euclidean unit normal ν. This is the
/// degree Q − 1 density per unit Euclidean area, i.e. the parameter density
/// divided by |∂_1Ψ ∧ ⋯ ∧ ∂_nΨ|.
pub fn hypersurface_density(map: &ParamMap, y: &[f64]) -> Result<f64> {
    let g = map.group();
    let q = g.dim();
    if map.n() + 1 != q {
        return Err(Error::ArityError(format!(
            "a hypersurface needs {} parameters, got {}",
            q - 1,
            map.n()
        )));
    }
    let p = map.eval(y)?;
    let j = map.jacobian(y)?;
    let normal = kernel(&j.transpose(), 1e-12);
    if normal.ncols() != 1 {
        return Err(Error::DegenerateTangent {
            rank: q - normal.ncols(),
            n: map.n(),
        });
    }
    let frame = g.left_invariant_frame(&p);
    let sum: f64 = g
        .layer_range(1)
        .map(|i| frame.column(i).dot(&normal.column(0)).powi(2))
        .sum();
    Ok(sum.sqrt())
}
