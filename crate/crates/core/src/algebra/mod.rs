//! Graded nilpotent Lie groups in exponential coordinates.

mod bch;
pub mod catalog;
mod subspace;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::max_abs;
use bch::{BchPlan, X};

pub use subspace::{Subspace, SubspaceClass};
pub use catalog::CompositionAlgebra;

/// A point of the group in graded exponential coordinates.
pub type Point = Vec<f64>;

/// Highest step supported by the BCH plan.
pub const MAX_STEP: usize = 6;

const JACOBI_TOL: f64 = 1e-12;

/// Serialized group definition: 1-based bracket entries `[i, j, k, c]`
/// meaning `[e_i, e_j]` has coefficient `c` on `e_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDefinition {
    pub name: String,
    pub layers: Vec<usize>,
    #[serde(default)]
    pub brackets: Vec<(usize, usize, usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct GradedGroup {
    name: String,
    layer_dims: Vec<usize>,
    degrees: Vec<usize>,
    /// `table[i]` lists `(j, k, c)` with `[e_i, e_j] = ... + c e_k`.
    table: Vec<Vec<(usize, usize, f64)>>,
    plan: BchPlan,
}

/// Reusable buffers for repeated products.
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    nodes: Vec<f64>,
}

impl GradedGroup {
    pub fn load(def: &GroupDefinition) -> Result<Self> {
        if def.layers.is_empty() || def.layers.contains(&0) {
            return Err(Error::BadDimensions(format!(
                "layer dimensions must be positive, got {:?}",
                def.layers
            )));
        }
        let step = def.layers.len();
        if step > MAX_STEP {
            return Err(Error::StepTooLarge(step));
        }
        let degrees: Vec<usize> = def
            .layers
            .iter()
            .enumerate()
            .flat_map(|(j, &h)| std::iter::repeat_n(j + 1, h))
            .collect();
        let q = degrees.len();

        let mut dense = vec![0.0; q * q * q];
        let mut given = vec![false; q * q * q];
        let at = |i: usize, j: usize, k: usize| (i * q + j) * q + k;
        for &(i, j, k, c) in &def.brackets {
            if i == 0 || j == 0 || k == 0 || i > q || j > q || k > q {
                return Err(Error::BadDimensions(format!(
                    "bracket index ({i},{j},{k}) outside 1..={q}"
                )));
            }
            if !c.is_finite() {
                return Err(Error::NonFinite(format!("bracket ({i},{j},{k})")));
            }
            let (i, j, k) = (i - 1, j - 1, k - 1);
            if c == 0.0 {
                continue;
            }
            if i == j {
                return Err(Error::AntisymmetryViolation { i: i + 1, j: j + 1, k: k + 1 });
            }
            if degrees[k] != degrees[i] + degrees[j] {
                return Err(Error::GradingViolation {
                    i: i + 1,
                    j: j + 1,
                    k: k + 1,
                    di: degrees[i],
                    dj: degrees[j],
                    dk: degrees[k],
                });
            }
            // An entry may be given once (mirror filled in) or both ways
            // (then the two must agree).
            if given[at(j, i, k)] {
                if (dense[at(j, i, k)] + c).abs() > JACOBI_TOL * c.abs().max(1.0) {
                    return Err(Error::AntisymmetryViolation { i: i + 1, j: j + 1, k: k + 1 });
                }
            } else {
                dense[at(j, i, k)] -= c;
            }
            if given[at(i, j, k)] {
                return Err(Error::AntisymmetryViolation { i: i + 1, j: j + 1, k: k + 1 });
            }
            dense[at(i, j, k)] += c;
            given[at(i, j, k)] = true;
        }

        let mut table = vec![Vec::new(); q];
        for i in 0..q {
            for j in 0..q {
                for k in 0..q {
                    let c = dense[at(i, j, k)];
                    if c != 0.0 {
                        table[i].push((j, k, c));
                    }
                }
            }
        }

        let group = Self {
            name: def.name.clone(),
            layer_dims: def.layers.clone(),
            degrees,
            table,
            plan: BchPlan::new(step),
        };
        group.check_jacobi()?;
        Ok(group)
    }

    fn check_jacobi(&self) -> Result<()> {
        let q = self.dim();
        let scale = self
            .table
            .iter()
            .flatten()
            .fold(1.0_f64, |m, &(_, _, c)| m.max(c.abs()));
        let mut e = vec![vec![0.0; q]; q];
        for (i, row) in e.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for i in 0..q {
            for j in (i + 1)..q {
                for k in (j + 1)..q {
                    let a = self.bracket(&e[i], &self.bracket(&e[j], &e[k]));
                    let b = self.bracket(&e[j], &self.bracket(&e[k], &e[i]));
                    let c = self.bracket(&e[k], &self.bracket(&e[i], &e[j]));
                    let residual = (0..q)
                        .map(|l| (a[l] + b[l] + c[l]).abs())
                        .fold(0.0, f64::max);
                    if residual > JACOBI_TOL * scale * scale {
                        return Err(Error::JacobiViolation {
                            i: i + 1,
                            j: j + 1,
                            k: k + 1,
                            residual,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Topological dimension q.
    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    /// Step (number of layers).
    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Homogeneous dimension Q = Σ j h_j.
    pub fn homogeneous_dim(&self) -> usize {
        self.degrees.iter().sum()
    }

    /// Coordinate range of layer `j` (1-based).
    pub fn layer_range(&self, j: usize) -> std::ops::Range<usize> {
        let start: usize = self.layer_dims[..j - 1].iter().sum();
        start..start + self.layer_dims[j - 1]
    }

    /// Structure constants as 1-based `(i, j, k, c)` with `i < j`.
    pub fn structure_constants(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.table.iter().enumerate() {
            for &(j, k, c) in row {
                if i < j {
                    out.push((i + 1, j + 1, k + 1, c));
                }
            }
        }
        out
    }

    pub fn definition(&self) -> GroupDefinition {
        GroupDefinition {
            name: self.name.clone(),
            layers: self.layer_dims.clone(),
            brackets: self.structure_constants(),
        }
    }

    /// Lie bracket of two algebra vectors.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.bracket_into(x, y, &mut out);
        out
    }

    fn bracket_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.table.iter().enumerate() {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for &(j, k, c) in row {
                out[k] += xi * y[j] * c;
            }
        }
    }

    fn check_len(&self, v: &[f64]) {
        assert_eq!(
            v.len(),
            self.dim(),
            "point has length {} but the group has dimension {}",
            v.len(),
            self.dim()
        );
    }

    /// Evaluates the plan terms selected by `keep` (by Y-count) into `out`.
    fn eval_plan(
        &self,
        x: &[f64],
        y: &[f64],
        keep: impl Fn(usize) -> bool,
        out: &mut [f64],
        scratch: &mut Scratch,
    ) {
        let q = self.dim();
        let plan = &self.plan;
        scratch.nodes.resize(plan.nodes.len() * q, 0.0);
        for (id, node) in plan.nodes.iter().enumerate() {
            let letter = if node.letter == X { x } else { y };
            let (done, rest) = scratch.nodes.split_at_mut(id * q);
            let slot = &mut rest[..q];
            match node.inner {
                None => slot.copy_from_slice(letter),
                Some(inner) => {
                    let inner_val = &done[inner * q..(inner + 1) * q];
                    slot.iter_mut().for_each(|v| *v = 0.0);
                    for (i, row) in self.table.iter().enumerate() {
                        let li = letter[i];
                        if li == 0.0 {
                            continue;
                        }
                        for &(j, k, c) in row {
                            slot[k] += li * inner_val[j] * c;
                        }
                    }
                }
            }
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(id, c) in &plan.terms {
            if !keep(plan.nodes[id].y_count) {
                continue;
            }
            let val = &scratch.nodes[id * q..(id + 1) * q];
            for (o, v) in out.iter_mut().zip(val) {
                *o += c * v;
            }
        }
    }

    /// Group product x·y.
    pub fn mul(&self, x: &[f64], y: &[f64]) -> Point {
        let mut out = vec![0.0; self.dim()];
        self.mul_into(x, y, &mut out, &mut Scratch::default());
        out
    }

    /// Group product written into `out`, reusing `scratch`.
    pub fn mul_into(&self, x: &[f64], y: &[f64], out: &mut [f64], scratch: &mut Scratch) {
        self.check_len(x);
        self.check_len(y);
        if self.step() == 1 {
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o = a + b;
            }
            return;
        }
        self.eval_plan(x, y, |_| true, out, scratch);
    }

    /// Inverse in exponential coordinates: x⁻¹ = −x.
    pub fn inverse(&self, x: &[f64]) -> Point {
        self.check_len(x);
        x.iter().map(|v| -v).collect()
    }

    /// Intrinsic dilation δ_r.
    pub fn dilate(&self, r: f64, x: &[f64]) -> Result<Point> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::NonPositiveScale(r));
        }
        self.check_len(x);
        Ok(self.dilate_unchecked(r, x))
    }

    pub(crate) fn dilate_unchecked(&self, r: f64, x: &[f64]) -> Point {
        let mut powers = vec![1.0; self.step() + 1];
        for j in 1..powers.len() {
            powers[j] = powers[j - 1] * r;
        }
        x.iter()
            .zip(&self.degrees)
            .map(|(v, &d)| v * powers[d])
            .collect()
    }

    /// Matrix whose column i is the left-invariant field X_i at x.
    pub fn left_invariant_frame(&self, x: &[f64]) -> DMatrix<f64> {
        self.check_len(x);
        let q = self.dim();
        let mut frame = DMatrix::identity(q, q);
        if self.step() == 1 {
            return frame;
        }
        let mut scratch = Scratch::default();
        let mut e = vec![0.0; q];
        let mut col = vec![0.0; q];
        for i in 0..q {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[i] = 1.0;
            // d/dt x·(t e_i) at t = 0: the terms linear in Y.
            self.eval_plan(x, &e, |ys| ys == 1, &mut col, &mut scratch);
            frame.set_column(i, &nalgebra::DVector::from_column_slice(&col));
        }
        frame
    }

    /// Coefficients c with Σ c_i X_i(x) = v, by forward substitution on the
    /// unipotent lower-triangular frame.
    pub fn frame_coefficients(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let frame = self.left_invariant_frame(x);
        self.solve_frame(&frame, v)
    }

    pub(crate) fn solve_frame(&self, frame: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
        let q = self.dim();
        assert_eq!(v.len(), q, "tangent vector has wrong length");
        let mut c = vec![0.0; q];
        for l in 0..q {
            let mut acc = v[l];
            for i in 0..l {
                if self.degrees[i] < self.degrees[l] {
                    acc -= frame[(l, i)] * c[i];
                }
            }
            c[l] = acc;
        }
        c
    }

    /// Sum of the `n` largest coordinate degrees: the maximal degree of an
    /// n-dimensional subspace.
    pub fn max_subspace_degree(&self, n: usize) -> usize {
        self.degrees.iter().rev().take(n).sum()
    }

    /// The pair (ℓ_n, r_n): vertical subgroups of dimension n are
    /// (r_n-dimensional part of layer ℓ_n) ⊕ all higher layers.
    pub fn vertical_split(&self, n: usize) -> (usize, usize) {
        assert!(n >= 1 && n <= self.dim(), "n must lie in 1..=q");
        let mut above = 0;
        for l in (1..=self.step()).rev() {
            let h = self.layer_dims[l - 1];
            if above + h >= n {
                return (l, n - above);
            }
            above += h;
        }
        unreachable!("n <= q always fits")
    }

    /// Q_n = ℓ_n r_n + Σ_{j > ℓ_n} j h_j.
    pub fn q_n(&self, n: usize) -> usize {
        let (l, r) = self.vertical_split(n);
        l * r + ((l + 1)..=self.step()).map(|j| j * self.layer_dims[j - 1]).sum::<usize>()
    }

    /// Maximum absolute entry of a point, used as a tolerance scale.
    pub fn scale_of(&self, x: &[f64]) -> f64 {
        max_abs(x)
    }
}

#[cfg(test)]
mod tests {
    use super::catalog;
    use super::*;

    fn h1() -> GradedGroup {
        catalog::heisenberg(1).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn heisenberg_product() {
        let g = h1();
        assert_eq!(g.mul(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), vec![1.0, 1.0, 1.0]);
        let x = [0.3, -1.2, 0.7];
        let y = [2.0, 0.5, -0.1];
        let xy = g.mul(&x, &y);
        let third = x[2] + y[2] + x[0] * y[1] - x[1] * y[0];
        assert!(close(&xy, &[x[0] + y[0], x[1] + y[1], third], 1e-15));
    }

    #[test]
    fn identity_and_inverse() {
        let g = h1();
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(g.mul(&x, &[0.0; 3]), x);
        assert_eq!(g.mul(&[0.0; 3], &x), x);
        assert_eq!(g.inverse(&x), vec![-1.0, -2.0, -3.0]);
        assert!(close(&g.mul(&x, &g.inverse(&x)), &[0.0; 3], 1e-12));
    }

    #[test]
    fn dilation() {
        let g = h1();
        assert_eq!(g.dilate(2.0, &[1.0, 1.0, 1.0]).unwrap(), vec![2.0, 2.0, 4.0]);
        assert_eq!(g.dilate(1.0, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(matches!(g.dilate(0.0, &[0.0; 3]), Err(Error::NonPositiveScale(_))));
        assert!(matches!(g.dilate(-1.0, &[0.0; 3]), Err(Error::NonPositiveScale(_))));
    }

    #[test]
    fn heisenberg_frame() {
        let g = h1();
        let x = [0.4, -1.5, 2.0];
        let a = g.left_invariant_frame(&x);
        let expect = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -x[1], x[0], 1.0],
        );
        assert!((a - expect).abs().max() < 1e-15);
        assert_eq!(g.left_invariant_frame(&[0.0; 3]), DMatrix::identity(3, 3));
    }

    #[test]
    fn frame_coefficient_examples() {
        let g = h1();
        assert_eq!(g.frame_coefficients(&[0.0; 3], &[1.0, 1.0, 0.0]), vec![1.0, 1.0, 0.0]);
        assert_eq!(
            g.frame_coefficients(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]),
            vec![0.0, 1.0, -1.0]
        );
    }

    #[test]
    fn grading_violation_detected() {
        let def = GroupDefinition {
            name: "bad".into(),
            layers: vec![2, 1],
            brackets: vec![(1, 2, 1, 1.0)],
        };
        assert!(matches!(GradedGroup::load(&def), Err(Error::GradingViolation { .. })));
    }

    #[test]
    fn jacobi_violation_detected() {
        // [e1,e2]=e4, [e2,e3]=e5, [e1,e5]... a step-3 algebra where the
        // cyclic sum on (e1,e2,e3) does not vanish.
        let def = GroupDefinition {
            name: "bad".into(),
            layers: vec![3, 2, 1],
            brackets: vec![(1, 2, 4, 1.0), (2, 3, 5, 1.0), (3, 4, 6, 1.0)],
        };
        assert!(matches!(GradedGroup::load(&def), Err(Error::JacobiViolation { .. })));
    }

    #[test]
    fn bad_dimensions() {
        let def = GroupDefinition {
            name: "bad".into(),
            layers: vec![2, 1],
            brackets: vec![(1, 2, 4, 1.0)],
        };
        assert!(matches!(GradedGroup::load(&def), Err(Error::BadDimensions(_))));
        let def = GroupDefinition {
            name: "bad".into(),
            layers: vec![],
            brackets: vec![],
        };
        assert!(matches!(GradedGroup::load(&def), Err(Error::BadDimensions(_))));
    }

    #[test]
    fn inconsistent_mirror_entry() {
        let def = GroupDefinition {
            name: "bad".into(),
            layers: vec![2, 1],
            brackets: vec![(1, 2, 3, 1.0), (2, 1, 3, 1.0)],
        };
        assert!(matches!(
            GradedGroup::load(&def),
            Err(Error::AntisymmetryViolation { .. })
        ));
    }

    #[test]
    fn mirror_entries_accepted() {
        let def = GroupDefinition {
            name: "h".into(),
            layers: vec![2, 1],
            brackets: vec![(1, 2, 3, 2.0), (2, 1, 3, -2.0)],
        };
        let g = GradedGroup::load(&def).unwrap();
        assert_eq!(g.bracket(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn q_n_heisenberg() {
        let g = h1();
        assert_eq!(g.homogeneous_dim(), 4);
        assert_eq!(g.q_n(1), 2);
        assert_eq!(g.q_n(2), 3);
        let g2 = catalog::heisenberg(2).unwrap();
        assert_eq!(g2.q_n(3), 4);
        assert_eq!(g2.vertical_split(3), (1, 2));
    }

    #[test]
    fn abelian_is_vector_addition() {
        let g = catalog::abelian(3).unwrap();
        assert_eq!(g.mul(&[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5]), vec![1.5, 2.5, 3.5]);
        assert_eq!(g.left_invariant_frame(&[1.0, 2.0, 3.0]), DMatrix::identity(3, 3));
        assert_eq!(g.q_n(2), 2);
    }
}
