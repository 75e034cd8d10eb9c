//! Sparse k-vectors over the left-invariant frame X_1..X_q.
//!
//! A basis k-vector X_I = X_{i_1} ∧ ... ∧ X_{i_k} is keyed by the bitmask of
//! I, so keys are automatically strictly increasing tuples.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::algebra::GradedGroup;
use crate::error::{Error, Result};
use crate::numeric::{rank, Policy};

#[derive(Debug, Clone, PartialEq)]
pub struct Multivector {
    grade: usize,
    degrees: Arc<[usize]>,
    terms: BTreeMap<u32, f64>,
}

/// Sign of merging disjoint index sets `a` then `b` into increasing order.
fn merge_sign(a: u32, b: u32) -> f64 {
    // Each index of b jumps over every larger index of a.
    let mut swaps = 0;
    let mut rest = b;
    while rest != 0 {
        let i = rest.trailing_zeros();
        swaps += (a >> i).count_ones();
        rest &= rest - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Multivector {
    pub fn zero(group: &GradedGroup, grade: usize) -> Self {
        Self {
            grade,
            degrees: group.degrees().into(),
            terms: BTreeMap::new(),
        }
    }

    /// Grade-1 multivector Σ c_i X_i.
    pub fn from_vector(group: &GradedGroup, coeffs: &[f64]) -> Self {
        assert_eq!(coeffs.len(), group.dim(), "coefficient vector has wrong length");
        assert!(group.dim() <= 32, "dimension above 32 is not supported");
        let mut v = Self::zero(group, 1);
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                v.terms.insert(1 << i, c);
            }
        }
        v.prune(&Policy::default());
        v
    }

    /// Basis k-vector X_I for 0-based, strictly increasing `indices`.
    pub fn basis(group: &GradedGroup, indices: &[usize]) -> Self {
        let mut mask = 0u32;
        for w in indices.windows(2) {
            assert!(w[0] < w[1], "indices must be strictly increasing");
        }
        for &i in indices {
            assert!(i < group.dim(), "index out of range");
            mask |= 1 << i;
        }
        let mut v = Self::zero(group, indices.len());
        v.terms.insert(mask, 1.0);
        v
    }

    pub fn grade(&self) -> usize {
        self.grade
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms as (0-based index tuple, coefficient).
    pub fn terms(&self) -> Vec<(Vec<usize>, f64)> {
        self.terms
            .iter()
            .map(|(&mask, &c)| ((0..32).filter(|i| mask >> i & 1 == 1).collect(), c))
            .collect()
    }

    pub fn coefficient(&self, indices: &[usize]) -> f64 {
        let mask = indices.iter().fold(0u32, |m, &i| m | 1 << i);
        self.terms.get(&mask).copied().unwrap_or(0.0)
    }

    fn key_degree(&self, mask: u32) -> usize {
        (0..self.degrees.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| self.degrees[i])
            .sum()
    }

    /// Drops coefficients below the policy threshold relative to the largest.
    pub fn prune(&mut self, policy: &Policy) {
        let top = self.terms.values().fold(0.0_f64, |m, c| m.max(c.abs()));
        self.terms.retain(|_, c| !policy.is_zero(*c, top) && *c != 0.0);
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|c| *c *= s);
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.grade, other.grade, "grades differ");
        let mut out = self.clone();
        for (&k, &c) in &other.terms {
            *out.terms.entry(k).or_insert(0.0) += c;
        }
        out.prune(&Policy::default());
        out
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.wedge_with(other, &Policy::default())
    }

    pub fn wedge_with(&self, other: &Self, policy: &Policy) -> Result<Self> {
        assert_eq!(self.degrees, other.degrees, "multivectors from different groups");
        let q = self.degrees.len();
        if self.grade + other.grade > q {
            return Err(Error::GradeOverflow(self.grade, other.grade, q));
        }
        let mut terms: BTreeMap<u32, f64> = BTreeMap::new();
        for (&a, &ca) in &self.terms {
            for (&b, &cb) in &other.terms {
                if a & b != 0 {
                    continue;
                }
                *terms.entry(a | b).or_insert(0.0) += merge_sign(a, b) * ca * cb;
            }
        }
        let mut out = Self {
            grade: self.grade + other.grade,
            degrees: self.degrees.clone(),
            terms,
        };
        out.prune(policy);
        Ok(out)
    }

    /// π_M: keeps the terms whose degree equals `m`.
    pub fn project_degree(&self, m: usize) -> Self {
        let mut out = self.clone();
        out.terms.retain(|&k, _| self.key_degree(k) == m);
        out
    }

    /// Euclidean norm of the coefficients (frame k-vectors orthonormal).
    pub fn g_norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Largest M with ‖π_M(v)‖ > rel·‖v‖, or None for the zero multivector.
    pub fn degree(&self, policy: &Policy) -> Option<usize> {
        let total = self.g_norm();
        if total == 0.0 {
            return None;
        }
        let mut by_degree: BTreeMap<usize, f64> = BTreeMap::new();
        for (&k, &c) in &self.terms {
            *by_degree.entry(self.key_degree(k)).or_insert(0.0) += c * c;
        }
        by_degree
            .iter()
            .rev()
            .find(|(_, s)| s.sqrt() > policy.degree_rel * total)
            .map(|(&m, _)| m)
    }

    /// Degrees present, with the norm of each projection.
    pub fn degree_profile(&self) -> BTreeMap<usize, f64> {
        let mut by_degree: BTreeMap<usize, f64> = BTreeMap::new();
        for (&k, &c) in &self.terms {
            *by_degree.entry(self.key_degree(k)).or_insert(0.0) += c * c;
        }
        by_degree.values_mut().for_each(|s| *s = s.sqrt());
        by_degree
    }
}

/// Rewrites the columns of `tangent` (vectors at p) in the frame at p and
/// wedges them: the left-invariant n-vector whose value at p is τ.
pub fn lift_tangent(group: &GradedGroup, p: &[f64], tangent: &DMatrix<f64>) -> Result<Multivector> {
    lift_tangent_with(group, p, tangent, &Policy::default())
}

pub fn lift_tangent_with(
    group: &GradedGroup,
    p: &[f64],
    tangent: &DMatrix<f64>,
    policy: &Policy,
) -> Result<Multivector> {
    let n = tangent.ncols();
    if tangent.nrows() != group.dim() {
        return Err(Error::BadDimensions(format!(
            "tangent basis has {} rows, expected {}",
            tangent.nrows(),
            group.dim()
        )));
    }
    let r = rank(tangent, policy.rank_rel);
    if r < n {
        return Err(Error::DegenerateTangent { rank: r, n });
    }
    let frame = group.left_invariant_frame(p);
    let mut acc: Option<Multivector> = None;
    for col in tangent.column_iter() {
        let v: Vec<f64> = col.iter().cloned().collect();
        let c = group.solve_frame(&frame, &v);
        // Keep the raw coefficients; pruning happens once on the product.
        let mut single = Multivector::zero(group, 1);
        for (i, &ci) in c.iter().enumerate() {
            if ci != 0.0 {
                single.terms.insert(1 << i, ci);
            }
        }
        acc = Some(match acc {
            None => single,
            Some(a) => {
                a.wedge_with(&single, &Policy { zero_rel: 0.0, ..*policy })?
            }
        });
    }
    let mut out = acc.unwrap_or_else(|| Multivector::zero(group, 0));
    out.prune(policy);
    if out.is_zero() {
        return Err(Error::DegenerateTangent { rank: r, n });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::catalog;

    #[test]
    fn wedge_examples() {
        let g = catalog::heisenberg(1).unwrap();
        let e1 = Multivector::basis(&g, &[0]);
        let e2 = Multivector::basis(&g, &[1]);
        assert!(e1.wedge(&e1).unwrap().is_zero());
        assert_eq!(e1.wedge(&e2).unwrap().coefficient(&[0, 1]), 1.0);
        assert_eq!(e2.wedge(&e1).unwrap().coefficient(&[0, 1]), -1.0);
        let a = Multivector::from_vector(&g, &[1.0, 0.0, 1.0]);
        let w = a.wedge(&e2).unwrap();
        assert_eq!(w.terms(), vec![(vec![0, 1], 1.0), (vec![1, 2], -1.0)]);
    }

    #[test]
    fn grade_overflow() {
        let g = catalog::heisenberg(1).unwrap();
        let a = Multivector::basis(&g, &[0, 1]);
        let b = Multivector::basis(&g, &[1, 2]);
        assert!(matches!(a.wedge(&b), Err(Error::GradeOverflow(2, 2, 3))));
    }

    #[test]
    fn projections() {
        let g = catalog::heisenberg(1).unwrap();
        let x12 = Multivector::basis(&g, &[0, 1]);
        assert_eq!(x12.project_degree(2), x12);
        assert!(x12.project_degree(3).is_zero());
        let x13 = Multivector::basis(&g, &[0, 2]);
        assert_eq!(x13.project_degree(3), x13);
        assert!(Multivector::zero(&g, 2).project_degree(2).is_zero());
    }

    #[test]
    fn norms() {
        let g = catalog::heisenberg(1).unwrap();
        let x12 = Multivector::basis(&g, &[0, 1]);
        let x13 = Multivector::basis(&g, &[0, 2]);
        assert_eq!(x13.g_norm(), 1.0);
        assert_eq!(x12.scale(3.0).g_norm(), 3.0);
        assert!((x12.add(&x13).g_norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lift_examples() {
        let g = catalog::heisenberg(1).unwrap();
        let t = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let xi = lift_tangent(&g, &[0.0; 3], &t).unwrap();
        assert_eq!(xi, Multivector::basis(&g, &[0, 1]));
        assert_eq!(xi.degree(&Policy::default()), Some(2));

        let t = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let xi = lift_tangent(&g, &[0.7, 0.0, -1.3], &t).unwrap();
        assert_eq!(xi, Multivector::basis(&g, &[0, 2]));

        let t = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        assert!(matches!(
            lift_tangent(&g, &[0.0; 3], &t),
            Err(Error::DegenerateTangent { .. })
        ));
    }
}
