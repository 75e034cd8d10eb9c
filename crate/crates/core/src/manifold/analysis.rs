use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ParamMap;
use crate::algebra::{GradedGroup, Subspace, SubspaceClass};
use crate::error::{Error, Result};
use crate::exterior::{lift_tangent_with, Multivector};
use crate::numeric::{kernel, rank, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Horizontal,
    Transversal,
    VerticalRegular,
    LowDegree,
    Irregular,
}

impl PointClass {
    pub fn label(self) -> &'static str {
        match self {
            Self::Horizontal => "horizontal",
            Self::Transversal => "transversal",
            Self::VerticalRegular => "vertical_regular",
            Self::LowDegree => "low_degree",
            Self::Irregular => "irregular",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAnalysis {
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub degree: usize,
    /// Maximal degree Q_n of an n-dimensional subspace.
    pub q_n: usize,
    /// Orthonormal basis (columns) of the homogeneous tangent space.
    pub htangent: Option<Vec<Vec<f64>>>,
    pub htangent_class: Option<SubspaceClass>,
    pub regular: bool,
    /// All tangent frame coefficients vanish above the first layer.
    pub horizontal_tangency: bool,
    /// The horizontal fiber H_pG lies in T_pΣ.
    pub characteristic: bool,
    pub alpha: Vec<usize>,
    pub classification: PointClass,
    /// Degree-profile norms ‖π_M(ξ)‖ keyed by M.
    pub degree_profile: BTreeMap<usize, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Frame coefficients of the tangent columns at p.
pub(crate) fn frame_tangent(group: &GradedGroup, p: &[f64], jac: &DMatrix<f64>) -> DMatrix<f64> {
    let frame = group.left_invariant_frame(p);
    let mut c = DMatrix::zeros(group.dim(), jac.ncols());
    for k in 0..jac.ncols() {
        let col: Vec<f64> = jac.column(k).iter().cloned().collect();
        c.set_column(k, &DVector::from_vec(group.solve_frame(&frame, &col)));
    }
    c
}

/// {X : X ∧ η = 0} for an n-vector η.
pub(crate) fn wedge_kernel(group: &GradedGroup, eta: &Multivector, policy: &Policy) -> Result<DMatrix<f64>> {
    let q = group.dim();
    let mut rows: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut cols: Vec<Vec<(Vec<usize>, f64)>> = Vec::with_capacity(q);
    for i in 0..q {
        let w = Multivector::basis(group, &[i]).wedge_with(eta, &Policy { zero_rel: 0.0, ..*policy })?;
        let terms = w.terms();
        for (k, _) in &terms {
            let next = rows.len();
            rows.entry(k.clone()).or_insert(next);
        }
        cols.push(terms);
    }
    let mut m = DMatrix::zeros(rows.len().max(1), q);
    for (i, terms) in cols.iter().enumerate() {
        for (k, c) in terms {
            m[(rows[k], i)] = *c;
        }
    }
    Ok(kernel(&m, policy.rank_rel))
}

/// Rows chosen greedily by decreasing degree while they raise the rank:
/// a maximal-degree row basis of the frame-coefficient matrix.
pub(crate) fn alpha_from_coefficients(group: &GradedGroup, c: &DMatrix<f64>, policy: &Policy) -> Vec<usize> {
    let q = group.dim();
    let n = c.ncols();
    let scale = (0..q).map(|i| c.row(i).norm()).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|a, b| group.degrees()[*b].cmp(&group.degrees()[*a]).then(a.cmp(b)));
    let mut chosen: Vec<DVector<f64>> = Vec::new();
    let mut alpha = vec![0; group.step()];
    for i in order {
        if chosen.len() == n {
            break;
        }
        let mut r: DVector<f64> = c.row(i).transpose();
        for b in &chosen {
            let proj = b.dot(&r);
            r -= b * proj;
        }
        let norm = r.norm();
        if norm > policy.rank_rel.max(1e-12) * scale * 1e3 {
            chosen.push(r / norm);
            alpha[group.degrees()[i] - 1] += 1;
        }
    }
    alpha
}

fn column_vecs(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter().map(|c| c.iter().cloned().collect()).collect()
}

/// Analysis of the tangent plane spanned by the columns of `jac` at p.
pub fn analyze_tangent(
    group: &GradedGroup,
    y: &[f64],
    p: &[f64],
    jac: &DMatrix<f64>,
    policy: &Policy,
    reference_degree: Option<usize>,
) -> Result<PointAnalysis> {
    let n = jac.ncols();
    let xi = lift_tangent_with(group, p, jac, policy)?;
    let degree = xi.degree(policy).ok_or(Error::DegenerateTangent { rank: 0, n })?;
    let c = frame_tangent(group, p, jac);
    let alpha = alpha_from_coefficients(group, &c, policy);
    let echelon: usize = alpha.iter().enumerate().map(|(j, a)| (j + 1) * a).sum();
    if echelon != degree || alpha.iter().sum::<usize>() != n {
        return Err(Error::InconsistentDegree {
            echelon,
            multivector: degree,
        });
    }

    let scale = c.abs().max();
    let first = group.layer_range(1);
    let horizontal_tangency = (0..group.dim())
        .filter(|i| !first.contains(i))
        .all(|i| c.row(i).iter().all(|v| v.abs() <= policy.zero_rel * scale));

    let mut aug = c.clone();
    aug = aug.resize_horizontally(n + first.len(), 0.0);
    for (k, i) in first.clone().enumerate() {
        aug[(i, n + k)] = 1.0;
    }
    let characteristic = rank(&aug, policy.rank_rel) == rank(&c, policy.rank_rel);

    let q_n = group.q_n(n);
    let eta = xi.project_degree(degree);
    let kern = wedge_kernel(group, &eta, policy)?;
    let (htangent, htangent_class, regular, note) = if kern.ncols() == n {
        let a = Subspace::new(group, kern.clone())?;
        let class = a.classify(group, 1e-9);
        (Some(column_vecs(&kern)), Some(class), class.subalgebra, None)
    } else {
        (
            None,
            None,
            false,
            Some(Error::NonSimpleProjection { kernel: kern.ncols(), n }.to_string()),
        )
    };

    let reference = reference_degree.unwrap_or(degree).max(degree);
    let classification = match htangent_class {
        _ if !regular => PointClass::Irregular,
        Some(cl) if cl.horizontal => PointClass::Horizontal,
        _ if degree == q_n => PointClass::Transversal,
        _ if degree < reference => PointClass::LowDegree,
        _ => PointClass::VerticalRegular,
    };
    let note = match (classification, htangent_class) {
        (PointClass::Transversal, Some(cl)) if !cl.vertical => {
            Some("degree equals Q_n but the homogeneous tangent is not vertical".to_string())
        }
        _ => note,
    };

    Ok(PointAnalysis {
        y: y.to_vec(),
        p: p.to_vec(),
        degree,
        q_n,
        htangent,
        htangent_class,
        regular,
        horizontal_tangency,
        characteristic,
        alpha,
        classification,
        degree_profile: xi.degree_profile(),
        note,
    })
}

impl ParamMap {
    fn lift(&self, y: &[f64], policy: &Policy) -> Result<(Vec<f64>, DMatrix<f64>, Multivector)> {
        let p = self.eval(y)?;
        let j = self.jacobian(y)?;
        let xi = lift_tangent_with(&self.group, &p, &j, policy)?;
        Ok((p, j, xi))
    }

    /// Left-invariant n-vector ξ with ξ(p) = τ_Σ(p).
    pub fn tangent_multivector(&self, y: &[f64], policy: &Policy) -> Result<Multivector> {
        Ok(self.lift(y, policy)?.2)
    }

    /// d_Σ(Ψ(y)).
    pub fn pointwise_degree(&self, y: &[f64], policy: &Policy) -> Result<usize> {
        let (_, j, xi) = self.lift(y, policy)?;
        xi.degree(policy).ok_or(Error::DegenerateTangent { rank: 0, n: j.ncols() })
    }

    /// Homogeneous tangent space A (orthonormal basis) and regularity.
    pub fn homogeneous_tangent(&self, y: &[f64], policy: &Policy) -> Result<(Subspace, bool)> {
        let (_, _, xi) = self.lift(y, policy)?;
        let degree = xi.degree(policy).ok_or(Error::DegenerateTangent { rank: 0, n: self.n })?;
        let kern = wedge_kernel(&self.group, &xi.project_degree(degree), policy)?;
        if kern.ncols() != self.n {
            return Err(Error::NonSimpleProjection { kernel: kern.ncols(), n: self.n });
        }
        let a = Subspace::new(&self.group, kern)?;
        let regular = a.classify(&self.group, 1e-9).subalgebra;
        Ok((a, regular))
    }

    /// α_j = number of echelon pivots in layer j; Σ j α_j is the degree.
    pub fn alpha_profile(&self, y: &[f64], policy: &Policy) -> Result<Vec<usize>> {
        let (p, j, xi) = self.lift(y, policy)?;
        let degree = xi.degree(policy).ok_or(Error::DegenerateTangent { rank: 0, n: self.n })?;
        let c = frame_tangent(&self.group, &p, &j);
        let alpha = alpha_from_coefficients(&self.group, &c, policy);
        let echelon: usize = alpha.iter().enumerate().map(|(k, a)| (k + 1) * a).sum();
        if echelon != degree {
            return Err(Error::InconsistentDegree {
                echelon,
                multivector: degree,
            });
        }
        Ok(alpha)
    }

    /// Maximum pointwise degree over a grid of at most ~3000 nodes.
    pub fn sampled_max_degree(&self, policy: &Policy) -> Result<usize> {
        let per_axis = ((3000f64).powf(1.0 / self.n as f64).floor() as usize).clamp(2, 9);
        let map = self.degree_map(&vec![per_axis; self.n], policy)?;
        Ok(map.summary.max_degree)
    }

    /// Full pointwise analysis; `reference_degree` is the degree of Σ used
    /// for the low-degree test (sampled when absent).
    pub fn classify_point(
        &self,
        y: &[f64],
        policy: &Policy,
        reference_degree: Option<usize>,
    ) -> Result<PointAnalysis> {
        let reference = match reference_degree {
            Some(r) => r,
            None => self.sampled_max_degree(policy)?,
        };
        let p = self.eval(y)?;
        let j = self.jacobian(y)?;
        analyze_tangent(&self.group, y, &p, &j, policy, Some(reference))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebra::catalog;

    fn pol() -> Policy {
        Policy::default()
    }

    fn map(g: GradedGroup, src: &str, n: usize, half: f64) -> ParamMap {
        ParamMap::parse(Arc::new(g), src, n, &vec![[-half, half]; n]).unwrap()
    }

    fn span_eq(basis: &[Vec<f64>], expected: &[usize], q: usize) -> bool {
        let b = DMatrix::from_columns(&basis.iter().map(|c| DVector::from_column_slice(c)).collect::<Vec<_>>());
        let mut e = DMatrix::zeros(q, expected.len());
        for (k, &i) in expected.iter().enumerate() {
            e[(i, k)] = 1.0;
        }
        let joint = DMatrix::from_columns(&b.column_iter().chain(e.column_iter()).collect::<Vec<_>>());
        rank(&joint, 1e-9) == expected.len() && rank(&b, 1e-9) == expected.len()
    }

    #[test]
    fn paraboloid_origin() {
        let m = map(catalog::heisenberg(1).unwrap(), "y1; y2; y1^2 + y2^2", 2, 1.0);
        let a = m.classify_point(&[0.0, 0.0], &pol(), None).unwrap();
        assert_eq!(a.degree, 2);
        assert!(span_eq(a.htangent.as_ref().unwrap(), &[0, 1], 3));
        assert!(!a.regular);
        assert!(a.characteristic);
        assert_eq!(a.classification, PointClass::Irregular);
        assert_eq!(a.alpha, vec![2, 0]);
        // Off the origin the paraboloid is non-characteristic with degree 3.
        let b = m.classify_point(&[0.5, 0.1], &pol(), None).unwrap();
        assert_eq!(b.degree, 3);
        assert!(!b.characteristic);
        assert_eq!(b.classification, PointClass::Transversal);
    }

    #[test]
    fn vertical_plane() {
        let m = map(catalog::heisenberg(1).unwrap(), "y1; 0; y2", 2, 1.0);
        for y in [[0.0, 0.0], [0.7, -0.3]] {
            let a = m.classify_point(&y, &pol(), None).unwrap();
            assert_eq!(a.degree, 3);
            assert!(span_eq(a.htangent.as_ref().unwrap(), &[0, 2], 3));
            assert!(a.regular && a.htangent_class.unwrap().vertical);
            assert_eq!(a.classification, PointClass::Transversal);
            assert_eq!(a.alpha, vec![1, 1]);
            assert!(a.note.is_none());
        }
    }

    #[test]
    fn helix_is_horizontal() {
        let m = map(catalog::heisenberg(1).unwrap(), "cos(y1); sin(y1); y1", 1, 3.0);
        for t in [-2.0, 0.0, 0.4, 2.9] {
            let a = m.classify_point(&[t], &pol(), Some(1)).unwrap();
            assert_eq!(a.degree, 1);
            assert!(a.horizontal_tangency);
            assert_eq!(a.classification, PointClass::Horizontal);
            assert_eq!(a.alpha, vec![1, 0]);
        }
    }

    #[test]
    fn legendrian_in_h2() {
        // Generated by F = y1^2 y2: x' = ∇F, t = y·∇F - 2F.
        let src = "y1; y2; 2*y1*y2; y1^2; y1^2*y2";
        let g = catalog::heisenberg(2).unwrap();
        let m = map(g, src, 2, 1.0);
        let a = m.classify_point(&[0.3, -0.4], &pol(), Some(2)).unwrap();
        assert_eq!(a.degree, 2);
        assert!(a.horizontal_tangency);
        assert_eq!(a.classification, PointClass::Horizontal);
        assert!(a.htangent_class.unwrap().subalgebra);
    }

    #[test]
    fn abelian_degree_is_dimension() {
        let m = map(catalog::abelian(3).unwrap(), "y1; y2; y1*y2 + sin(y1)", 2, 1.0);
        assert_eq!(m.pointwise_degree(&[0.2, 0.3], &pol()).unwrap(), 2);
    }
}
