use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::GradedGroup;
use crate::error::{Error, Result};
use crate::numeric::{normalized_min_singular, rank};

const INDEPENDENCE_TOL: f64 = 1e-10;

/// Linear subspace of the Lie algebra, spanned by the columns of `basis`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceClass {
    pub homogeneous: bool,
    pub subalgebra: bool,
    pub horizontal: bool,
    pub vertical: bool,
}

impl Subspace {
    pub fn new(group: &GradedGroup, basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != group.dim() {
            return Err(Error::BadDimensions(format!(
                "subspace basis has {} rows, group dimension is {}",
                basis.nrows(),
                group.dim()
            )));
        }
        if basis.ncols() == 0 || basis.ncols() > group.dim() {
            return Err(Error::BadDimensions(format!(
                "subspace dimension {} outside 1..={}",
                basis.ncols(),
                group.dim()
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("subspace basis".into()));
        }
        let smin = normalized_min_singular(&basis);
        if smin <= INDEPENDENCE_TOL {
            return Err(Error::DegenerateSubspace(smin));
        }
        Ok(Self { basis })
    }

    /// Span of the coordinate vectors e_i for the given 0-based indices.
    pub fn coordinate(group: &GradedGroup, indices: &[usize]) -> Result<Self> {
        let q = group.dim();
        let mut basis = DMatrix::zeros(q, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            if i >= q {
                return Err(Error::BadDimensions(format!("coordinate index {i} >= {q}")));
            }
            basis[(i, c)] = 1.0;
        }
        Self::new(group, basis)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthonormal basis of the same span.
    pub fn orthonormal(&self) -> DMatrix<f64> {
        let mut q = self.basis.clone().qr().q();
        q.resize_horizontally_mut(self.dim(), 0.0);
        q
    }

    /// Euclidean distance from `v` to the span, relative to `|v|`.
    fn relative_residual(&self, on: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
        let proj = on * (on.transpose() * v);
        let norm = v.norm();
        if norm == 0.0 {
            0.0
        } else {
            (v - proj).norm() / norm
        }
    }

    /// Degree of the subspace: Σ_j j·dim(S ∩ H^j) for homogeneous S.
    pub fn layer_dims_within(&self, group: &GradedGroup, tol: f64) -> Vec<usize> {
        (1..=group.step())
            .map(|j| {
                let range = group.layer_range(j);
                // dim(S ∩ H^j) = n - rank(S projected off H^j).
                let mut off = self.basis.clone();
                for i in range.clone() {
                    off.row_mut(i).fill(0.0);
                }
                self.dim() - rank(&off, tol)
            })
            .collect()
    }

    pub fn classify(&self, group: &GradedGroup, tol: f64) -> SubspaceClass {
        let n = self.dim();
        let on = self.orthonormal();
        let step = group.step();

        // Σ_j dim(P_j S ∩ S) = n, with dim(A ∩ B) = dim A + dim B − dim(A + B).
        let mut total = 0;
        for j in 1..=step {
            let mut proj = self.basis.clone();
            for i in 0..group.dim() {
                if !group.layer_range(j).contains(&i) {
                    proj.row_mut(i).fill(0.0);
                }
            }
            let pj = rank(&proj, tol);
            if pj == 0 {
                continue;
            }
            let sum = rank(&DMatrix::from_columns(
                &proj.column_iter().chain(self.basis.column_iter()).collect::<Vec<_>>(),
            ), tol);
            total += pj + n - sum;
        }
        let homogeneous = total == n;

        let mut subalgebra = true;
        'outer: for a in 0..n {
            for b in (a + 1)..n {
                let x: Vec<f64> = self.basis.column(a).iter().cloned().collect();
                let y: Vec<f64> = self.basis.column(b).iter().cloned().collect();
                let w = DVector::from_vec(group.bracket(&x, &y));
                let scale = self.basis.column(a).norm() * self.basis.column(b).norm();
                let proj = &on * (on.transpose() * &w);
                if (&w - proj).norm() > tol * scale.max(w.norm()) {
                    subalgebra = false;
                    break 'outer;
                }
            }
        }

        let first = group.layer_range(1);
        let max_entry = self.basis.abs().max();
        let horizontal = (0..group.dim())
            .filter(|i| !first.contains(i))
            .all(|i| self.basis.row(i).iter().all(|v| v.abs() <= tol * max_entry));

        // Vertical: lowest layer touched is ℓ, S ⊂ H^{≥ℓ}, and S ⊇ H^{>ℓ}.
        let lowest = (1..=step).find(|&j| {
            group
                .layer_range(j)
                .any(|i| self.basis.row(i).iter().any(|v| v.abs() > tol * max_entry))
        });
        let vertical = match lowest {
            None => false,
            Some(l) => ((l + 1)..=step).all(|j| {
                group.layer_range(j).all(|i| {
                    let mut e = DVector::zeros(group.dim());
                    e[i] = 1.0;
                    self.relative_residual(&on, &e) <= tol
                })
            }),
        };

        SubspaceClass {
            homogeneous,
            subalgebra,
            horizontal,
            vertical,
        }
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> DMatrix<f64> {
        crate::numeric::kernel(&self.orthonormal().transpose(), 1e-12)
    }
}
