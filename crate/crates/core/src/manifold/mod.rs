//! Parametrized submanifolds Ψ: U ⊂ R^n → G and their pointwise analysis.

mod analysis;
mod blowup;
mod degree_map;

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::GradedGroup;
use crate::error::{Error, Result};
use crate::expr::{self, EvalScratch, Expr};
use crate::numeric::rank;

pub use analysis::{analyze_tangent, PointAnalysis, PointClass};
pub use blowup::{covered_case, BlowupCase, BlowupReport, CoordinateTrace};
pub use degree_map::{DegreeMap, DegreeMapSummary, GridPoint};

/// Serialized submanifold: `exprs` holds q semicolon-separated expressions
/// in y1..yn, `domain` one closed interval per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmanifoldSpec {
    pub n: usize,
    pub exprs: String,
    pub domain: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct ParamMap {
    group: Arc<GradedGroup>,
    n: usize,
    exprs: Vec<Expr>,
    domain: Vec<[f64; 2]>,
    source: String,
}

/// Reusable buffers for parametrization evaluations.
#[derive(Debug, Clone, Default)]
pub struct ParamScratch {
    expr: EvalScratch,
    grad: Vec<f64>,
}

fn var_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("y{i}")).collect()
}

impl ParamMap {
    pub fn parse(group: Arc<GradedGroup>, src: &str, n: usize, domain: &[[f64; 2]]) -> Result<Self> {
        if n == 0 || n > group.dim() {
            return Err(Error::ArityError(format!(
                "parameter dimension {n} outside 1..={}",
                group.dim()
            )));
        }
        if domain.len() != n {
            return Err(Error::ArityError(format!(
                "domain has {} intervals for {n} parameters",
                domain.len()
            )));
        }
        for (i, [lo, hi]) in domain.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::DomainViolation(format!(
                    "interval {} is [{lo}, {hi}]",
                    i + 1
                )));
            }
        }
        let names = var_names(n);
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let exprs = expr::parse_list(src, &refs)?;
        if exprs.len() != group.dim() {
            return Err(Error::ArityError(format!(
                "{} expressions given, the group has dimension {}",
                exprs.len(),
                group.dim()
            )));
        }
        let map = Self {
            group,
            n,
            exprs,
            domain: domain.to_vec(),
            source: src.to_string(),
        };
        map.check_embedding()?;
        Ok(map)
    }

    pub fn from_spec(group: Arc<GradedGroup>, spec: &SubmanifoldSpec) -> Result<Self> {
        Self::parse(group, &spec.exprs, spec.n, &spec.domain)
    }

    pub fn spec(&self) -> SubmanifoldSpec {
        SubmanifoldSpec {
            n: self.n,
            exprs: self.source.clone(),
            domain: self.domain.clone(),
        }
    }

    /// Full-rank Jacobian at the interior points of a 3^n grid.
    fn check_embedding(&self) -> Result<()> {
        let count = 3usize.pow(self.n as u32);
        for idx in 0..count {
            let mut k = idx;
            let y: Vec<f64> = self
                .domain
                .iter()
                .map(|[lo, hi]| {
                    let f = [0.25, 0.5, 0.75][k % 3];
                    k /= 3;
                    lo + f * (hi - lo)
                })
                .collect();
            let j = self.jacobian(&y)?;
            let r = rank(&j, 1e-9);
            if r < self.n {
                return Err(Error::DegenerateTangent { rank: r, n: self.n });
            }
        }
        Ok(())
    }

    pub fn group(&self) -> &Arc<GradedGroup> {
        &self.group
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &[[f64; 2]] {
        &self.domain
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn check_domain(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.n {
            return Err(Error::ArityError(format!(
                "parameter point has {} entries, expected {}",
                y.len(),
                self.n
            )));
        }
        for (i, (v, [lo, hi])) in y.iter().zip(&self.domain).enumerate() {
            let slack = 1e-12 * (hi - lo);
            if !(v.is_finite() && *v >= lo - slack && *v <= hi + slack) {
                return Err(Error::DomainViolation(format!(
                    "y{} = {v} outside [{lo}, {hi}]",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        self.check_domain(y).is_ok()
    }

    /// Ψ(y).
    pub fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(y)?;
        let mut out = vec![0.0; self.group.dim()];
        self.eval_into(y, &mut out, &mut ParamScratch::default())?;
        Ok(out)
    }

    /// Ψ(y) without the domain check.
    pub fn eval_into(&self, y: &[f64], out: &mut [f64], scratch: &mut ParamScratch) -> Result<()> {
        for (o, e) in out.iter_mut().zip(&self.exprs) {
            *o = e.eval(y, &mut scratch.expr);
            if !o.is_finite() {
                return Err(Error::NonFinite(format!("'{}' at y = {y:?}", e.source())));
            }
        }
        Ok(())
    }

    /// q×n matrix of partial derivatives.
    pub fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        self.check_domain(y)?;
        let mut out = vec![0.0; self.group.dim()];
        let mut jac = DMatrix::zeros(self.group.dim(), self.n);
        self.eval_jacobian_into(y, &mut out, &mut jac, &mut ParamScratch::default())?;
        Ok(jac)
    }

    /// Ψ(y) and its Jacobian without the domain check.
    pub fn eval_jacobian_into(
        &self,
        y: &[f64],
        out: &mut [f64],
        jac: &mut DMatrix<f64>,
        scratch: &mut ParamScratch,
    ) -> Result<()> {
        scratch.grad.resize(self.n, 0.0);
        for (i, e) in self.exprs.iter().enumerate() {
            out[i] = e.eval_grad(y, &mut scratch.grad, &mut scratch.expr);
            if !out[i].is_finite() || scratch.grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "'{}' or its derivative at y = {y:?}",
                    e.source()
                )));
            }
            for k in 0..self.n {
                jac[(i, k)] = scratch.grad[k];
            }
        }
        Ok(())
    }

    /// The left translate p·Σ, evaluated through the group product.
    pub fn translated(&self, p: &[f64]) -> Translated<'_> {
        Translated { map: self, p: p.to_vec() }
    }
}

/// The submanifold p·Σ, evaluated through the group product.
#[derive(Debug, Clone)]
pub struct Translated<'a> {
    map: &'a ParamMap,
    p: Vec<f64>,
}

impl Translated<'_> {
    pub fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.map.group.mul(&self.p, &self.map.eval(y)?))
    }

    /// Jacobian of y ↦ p·Ψ(y): the differential of left translation is
    /// A(p·x) A(x)⁻¹ applied to the columns.
    pub fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let g = &self.map.group;
        let x = self.map.eval(y)?;
        let j = self.map.jacobian(y)?;
        let frame_x = g.left_invariant_frame(&x);
        let frame_px = g.left_invariant_frame(&g.mul(&self.p, &x));
        let mut out = DMatrix::zeros(g.dim(), j.ncols());
        for k in 0..j.ncols() {
            let col: Vec<f64> = j.column(k).iter().cloned().collect();
            let c = g.solve_frame(&frame_x, &col);
            let v = &frame_px * nalgebra::DVector::from_vec(c);
            out.set_column(k, &v);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::catalog;

    fn h1() -> Arc<GradedGroup> {
        Arc::new(catalog::heisenberg(1).unwrap())
    }

    #[test]
    fn parse_and_evaluate() {
        let m = ParamMap::parse(h1(), "y1; y2; y1^2 + y2^2", 2, &[[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
        assert_eq!(m.eval(&[0.5, -0.5]).unwrap(), vec![0.5, -0.5, 0.5]);
        let j = m.jacobian(&[0.0, 0.0]).unwrap();
        assert_eq!(j, DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn helix_jacobian() {
        let m = ParamMap::parse(h1(), "cos(y1); sin(y1); y1", 1, &[[-4.0, 4.0]]).unwrap();
        let j = m.jacobian(&[0.0]).unwrap();
        assert_eq!(j.column(0).iter().cloned().collect::<Vec<_>>(), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = ParamMap::parse(
            h1(),
            "y1 * cos(y2); exp(y1 / 3) - y2; sqrt(2 + y1^2 * y2)",
            2,
            &[[-1.0, 1.0], [-1.0, 1.0]],
        )
        .unwrap();
        let y = [0.3, -0.6];
        let j = m.jacobian(&y).unwrap();
        let h = 1e-5;
        for k in 0..2 {
            let mut a = y;
            let mut b = y;
            a[k] += h;
            b[k] -= h;
            let fa = m.eval(&a).unwrap();
            let fb = m.eval(&b).unwrap();
            for i in 0..3 {
                let fd = (fa[i] - fb[i]) / (2.0 * h);
                assert!((fd - j[(i, k)]).abs() <= 1e-6 * j[(i, k)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn errors() {
        let dom = [[-1.0, 1.0], [-1.0, 1.0]];
        assert!(matches!(
            ParamMap::parse(h1(), "y1; y2; +", 2, &dom),
            Err(Error::ParseError { position: 8, .. })
        ));
        assert!(matches!(ParamMap::parse(h1(), "y1; y2", 2, &dom), Err(Error::ArityError(_))));
        assert!(matches!(ParamMap::parse(h1(), "y1; y2; 0", 2, &dom[..1]), Err(Error::ArityError(_))));
        assert!(matches!(
            ParamMap::parse(h1(), "y1; y1; 0", 2, &dom),
            Err(Error::DegenerateTangent { .. })
        ));
        let m = ParamMap::parse(h1(), "y1; y2; 1 / y1", 2, &[[0.5, 1.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(m.eval(&[2.0, 0.0]), Err(Error::DomainViolation(_))));
        let m = ParamMap::parse(h1(), "y1; y2; 1 / (y1 - 0.6)", 2, &[[0.5, 1.0], [0.0, 1.0]]);
        assert!(m.is_ok());
        assert!(matches!(m.unwrap().jacobian(&[0.6, 0.0]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn translated_jacobian_matches_finite_differences() {
        let g = Arc::new(catalog::engel().unwrap());
        let m = ParamMap::parse(g, "y1; y2; y1*y2; y2^2", 2, &[[-1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let t = m.translated(&[0.4, -0.7, 1.1, 0.2]);
        let y = [0.2, 0.5];
        let j = t.jacobian(&y).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut a = y;
            let mut b = y;
            a[k] += h;
            b[k] -= h;
            let fa = t.eval(&a).unwrap();
            let fb = t.eval(&b).unwrap();
            for i in 0..4 {
                assert!(((fa[i] - fb[i]) / (2.0 * h) - j[(i, k)]).abs() < 1e-7);
            }
        }
    }
}
