//! Tolerance policy and small dense linear-algebra helpers.
//!
//! Every "is this zero" decision in the crate goes through a relative
//! threshold scaled by the largest magnitude of the object under test.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Relative thresholds used by the algebraic decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Policy {
    /// Generic relative zero threshold.
    pub zero_rel: f64,
    /// A degree-M projection counts as nonzero when its norm exceeds
    /// `degree_rel * |xi|`.
    pub degree_rel: f64,
    /// Relative singular-value cutoff for ranks and kernels.
    pub rank_rel: f64,
}

impl Default for Policy {
    fn default() -> Self {
        Self {
            zero_rel: 1e-9,
            degree_rel: 1e-9,
            rank_rel: 1e-9,
        }
    }
}

impl Policy {
    pub fn is_zero(&self, value: f64, scale: f64) -> bool {
        value.abs() <= self.zero_rel * scale.max(f64::MIN_POSITIVE)
    }
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub(crate) fn norm2(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Numerical rank from singular values, relative to the largest one.
pub fn rank(m: &DMatrix<f64>, rel: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0_f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel * top).count()
}

/// Orthonormal basis (as columns) of the column span, using the SVD.
pub fn orthonormal_columns(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if m.ncols() == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let top = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| top > 0.0 && svd.singular_values[i] > rel * top)
        .collect();
    let mut out = DMatrix::zeros(rows, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

/// Orthonormal basis of the null space of `m` (as columns).
pub fn kernel(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to at least n rows so the SVD returns a full right basis.
    let padded = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let top = sv.iter().cloned().fold(0.0_f64, f64::max);
    let null: Vec<usize> = (0..sv.len())
        .filter(|&i| top == 0.0 || sv[i] <= rel * top)
        .collect();
    let mut out = DMatrix::zeros(n, null.len());
    for (c, &i) in null.iter().enumerate() {
        out.set_column(c, &vt.row(i).transpose());
    }
    out
}

/// Smallest singular value after normalizing every column to unit length.
pub fn normalized_min_singular(m: &DMatrix<f64>) -> f64 {
    if m.ncols() == 0 {
        return 0.0;
    }
    let mut normed = m.clone();
    for mut col in normed.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    normed
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Volume of the Euclidean unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * std::f64::consts::PI / n as f64,
    }
}
