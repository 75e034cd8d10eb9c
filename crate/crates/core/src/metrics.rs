//! Explicitly evaluable homogeneous norms and their distances.
//!
//! Every kind depends on x only through the layer magnitudes |x_1|..|x_ι|,
//! so balls are multiradial and x⁻¹ = −x has the same norm as x.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{GradedGroup, Scratch, Subspace};
use crate::error::{Error, Result};
use crate::expr::{self, EvalScratch, Expr};
use crate::sampling;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_expr: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistanceKind {
    /// Unit ball {φ(|x_1|,..,|x_ι|) ≤ 1}; the norm is its dilation gauge.
    Multiradial(Expr),
    /// (|x_1|⁴ + w|x_2|²)^{1/4} on step-2 groups.
    CyganKoranyi { weight: f64 },
    /// max_j ε_j |x_j|^{1/j}.
    Box { eps: Vec<f64> },
    /// Gauge of the Euclidean ball of radius r₀.
    EuclideanBall { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    Convex,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub samples: usize,
    pub seed: u64,
    pub triangle_violations: usize,
    pub worst_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct HomogeneousDistance {
    group: Arc<GradedGroup>,
    kind: DistanceKind,
    /// Largest layer-j magnitude on the unit ball.
    layer_bounds: Vec<f64>,
}

/// Reusable buffers for norm evaluations.
#[derive(Debug, Clone, Default)]
pub struct NormScratch {
    layers: Vec<f64>,
    scaled: Vec<f64>,
    expr: EvalScratch,
    point: Vec<f64>,
    group: Scratch,
}

const TRIANGLE_SLACK: f64 = 1e-12;

impl HomogeneousDistance {
    pub fn new(group: Arc<GradedGroup>, kind: DistanceKind) -> Result<Self> {
        let step = group.step();
        match &kind {
            DistanceKind::Multiradial(phi) => {
                if phi.n_vars() != step {
                    return Err(Error::InvalidPhi(format!(
                        "profile must use exactly the variables a1..a{step}"
                    )));
                }
                if !phi.is_monotone_safe() {
                    return Err(Error::InvalidPhi(format!(
                        "'{}' is not built from monotone constructs (+, *, max, sqrt, positive constants and powers)",
                        phi.source()
                    )));
                }
            }
            DistanceKind::CyganKoranyi { weight } => {
                if step != 2 {
                    return Err(Error::InvalidArgument(
                        "Cygan-Koranyi norm needs a step-2 group".into(),
                    ));
                }
                if !(*weight > 0.0) {
                    return Err(Error::InvalidArgument("weight must be positive".into()));
                }
            }
            DistanceKind::Box { eps } => {
                if eps.len() != step || eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "box distance needs {step} positive weights, got {eps:?}"
                    )));
                }
            }
            DistanceKind::EuclideanBall { radius } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidArgument("radius must be positive".into()));
                }
            }
        }
        let mut d = Self {
            group,
            kind,
            layer_bounds: Vec::new(),
        };
        d.layer_bounds = d.compute_layer_bounds()?;
        Ok(d)
    }

    pub fn from_spec(group: Arc<GradedGroup>, spec: &DistanceSpec) -> Result<Self> {
        let step = group.step();
        let kind = match spec.kind.as_str() {
            "box" => DistanceKind::Box {
                eps: if spec.params.is_empty() {
                    vec![1.0; step]
                } else {
                    spec.params.clone()
                },
            },
            "cygan_koranyi" => DistanceKind::CyganKoranyi {
                weight: spec.params.first().copied().unwrap_or(16.0),
            },
            "euclidean_ball" => DistanceKind::EuclideanBall {
                radius: spec.params.first().copied().unwrap_or(1.0),
            },
            "multiradial" => {
                let src = spec.phi_expr.as_deref().ok_or_else(|| {
                    Error::InvalidPhi("multiradial distance needs phi_expr".into())
                })?;
                let names: Vec<String> = (1..=step).map(|j| format!("a{j}")).collect();
                let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                DistanceKind::Multiradial(expr::parse(src, &refs)?)
            }
            other => {
                return Err(Error::InvalidArgument(format!("unknown distance kind '{other}'")))
            }
        };
        Self::new(group, kind)
    }

    pub fn spec(&self) -> DistanceSpec {
        match &self.kind {
            DistanceKind::Multiradial(phi) => DistanceSpec {
                kind: "multiradial".into(),
                params: vec![],
                phi_expr: Some(phi.source().to_string()),
            },
            DistanceKind::CyganKoranyi { weight } => DistanceSpec {
                kind: "cygan_koranyi".into(),
                params: vec![*weight],
                phi_expr: None,
            },
            DistanceKind::Box { eps } => DistanceSpec {
                kind: "box".into(),
                params: eps.clone(),
                phi_expr: None,
            },
            DistanceKind::EuclideanBall { radius } => DistanceSpec {
                kind: "euclidean_ball".into(),
                params: vec![*radius],
                phi_expr: None,
            },
        }
    }

    pub fn group(&self) -> &Arc<GradedGroup> {
        &self.group
    }

    pub fn kind(&self) -> &DistanceKind {
        &self.kind
    }

    pub fn convexity(&self) -> Convexity {
        match self.kind {
            DistanceKind::Multiradial(_) => Convexity::Unknown,
            _ => Convexity::Convex,
        }
    }

    /// Every implemented kind is multiradial.
    pub fn is_multiradial(&self) -> bool {
        true
    }

    /// Declared n-vertical symmetry (multiradial distances have it for all n).
    pub fn vertically_symmetric(&self, _n: usize) -> bool {
        self.is_multiradial()
    }

    pub fn layer_bounds(&self) -> &[f64] {
        &self.layer_bounds
    }

    fn layer_magnitudes(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for j in 1..=self.group.step() {
            let r = self.group.layer_range(j);
            out.push(x[r].iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }

    /// Unit-ball membership from layer magnitudes.
    fn contains_layers(&self, a: &[f64], s: &mut EvalScratch) -> bool {
        match &self.kind {
            DistanceKind::Multiradial(phi) => phi.eval(a, s) <= 1.0,
            DistanceKind::CyganKoranyi { weight } => {
                a[0].powi(4) + weight * a[1] * a[1] <= 1.0
            }
            DistanceKind::Box { eps } => a
                .iter()
                .zip(eps)
                .enumerate()
                .all(|(j, (v, e))| v * e.powi(j as i32 + 1) <= 1.0),
            DistanceKind::EuclideanBall { radius } => {
                a.iter().map(|v| v * v).sum::<f64>() <= radius * radius
            }
        }
    }

    fn profile(&self, a: &[f64], s: &mut EvalScratch) -> f64 {
        match &self.kind {
            DistanceKind::Multiradial(phi) => phi.eval(a, s),
            DistanceKind::EuclideanBall { radius } => {
                a.iter().map(|v| v * v).sum::<f64>().sqrt() / radius
            }
            _ => unreachable!("closed-form kinds do not use the gauge"),
        }
    }

    fn norm_layers(&self, a: &[f64], scratch: &mut NormScratch) -> f64 {
        match &self.kind {
            DistanceKind::CyganKoranyi { weight } => (a[0].powi(4) + weight * a[1] * a[1]).powf(0.25),
            DistanceKind::Box { eps } => a
                .iter()
                .zip(eps)
                .enumerate()
                .map(|(j, (v, e))| e * v.powf(1.0 / (j + 1) as f64))
                .fold(0.0, f64::max),
            _ => {
                if a.iter().all(|v| *v == 0.0) {
                    return 0.0;
                }
                // Gauge: smallest t with profile(a_j / t^j) <= 1.
                let mut scaled = std::mem::take(&mut scratch.scaled);
                let mut f = |t: f64, s: &mut EvalScratch| {
                    scaled.clear();
                    scaled.extend(a.iter().enumerate().map(|(j, v)| v / t.powi(j as i32 + 1)));
                    self.profile(&scaled, s)
                };
                let s = &mut scratch.expr;
                let mut hi = 1.0;
                while f(hi, s) > 1.0 {
                    hi *= 2.0;
                }
                let mut lo = hi / 2.0;
                while f(lo, s) <= 1.0 {
                    hi = lo;
                    lo /= 2.0;
                    if lo == 0.0 {
                        return 0.0;
                    }
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if f(mid, s) <= 1.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                scratch.scaled = scaled;
                hi
            }
        }
    }

    /// Homogeneous norm ‖x‖ = d(x, 0).
    pub fn norm(&self, x: &[f64]) -> f64 {
        self.norm_with(x, &mut NormScratch::default())
    }

    pub fn norm_with(&self, x: &[f64], scratch: &mut NormScratch) -> f64 {
        let mut layers = std::mem::take(&mut scratch.layers);
        self.layer_magnitudes(x, &mut layers);
        let v = self.norm_layers(&layers, scratch);
        scratch.layers = layers;
        v
    }

    /// ‖x‖ ≤ r without computing the norm.
    pub fn in_ball(&self, x: &[f64], r: f64, scratch: &mut NormScratch) -> bool {
        let mut layers = std::mem::take(&mut scratch.layers);
        self.layer_magnitudes(x, &mut layers);
        let mut scale = 1.0;
        for a in layers.iter_mut() {
            scale *= r;
            *a /= scale;
        }
        let inside = self.contains_layers(&layers, &mut scratch.expr);
        scratch.layers = layers;
        inside
    }

    /// d(z, y) ≤ r, i.e. z⁻¹y in the ball of radius r.
    pub fn within(&self, z: &[f64], y: &[f64], r: f64, scratch: &mut NormScratch) -> bool {
        let mut point = std::mem::take(&mut scratch.point);
        point.resize(self.group.dim(), 0.0);
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        self.group.mul_into(&neg, y, &mut point, &mut scratch.group);
        let inside = self.in_ball(&point, r, scratch);
        scratch.point = point;
        inside
    }

    /// d(x, y) = ‖x⁻¹y‖.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.norm(&self.group.mul(&self.group.inverse(x), y))
    }

    fn compute_layer_bounds(&self) -> Result<Vec<f64>> {
        let step = self.group.step();
        let mut s = EvalScratch::default();
        let mut out = Vec::with_capacity(step);
        let zero = vec![0.0; step];
        if !self.contains_layers(&zero, &mut s) {
            return Err(Error::InvalidPhi("the origin lies outside the unit ball".into()));
        }
        for j in 0..step {
            let mut a = zero.clone();
            let inside = |v: f64, a: &mut Vec<f64>, s: &mut EvalScratch| {
                a[j] = v;
                self.contains_layers(a, s)
            };
            let mut hi = 1.0;
            while inside(hi, &mut a, &mut s) {
                hi *= 2.0;
                if hi > 1e12 {
                    return Err(Error::InvalidPhi(format!(
                        "profile is not coercive in layer {}",
                        j + 1
                    )));
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if inside(mid, &mut a, &mut s) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if lo == 0.0 {
                return Err(Error::InvalidPhi(format!(
                    "unit ball has no extent in layer {}",
                    j + 1
                )));
            }
            out.push(lo);
        }
        Ok(out)
    }

    /// Euclidean radius containing every point of norm ≤ ρ.
    pub fn global_radius(&self, rho: f64) -> f64 {
        self.layer_bounds
            .iter()
            .enumerate()
            .map(|(j, b)| (rho.powi(j as i32 + 1) * b).powi(2))
            .sum::<f64>()
            .sqrt()
            * (1.0 + 1e-9)
    }

    /// Euclidean radius R (in S, about the origin) with B(u,1) ∩ S inside
    /// the R-ball: largest section radius found along sampled directions of
    /// S, times 1.5.
    pub fn ball_bounding_radius(&self, s: &Subspace, u: &[f64]) -> Result<f64> {
        let basis = s.orthonormal();
        self.section_radius(&basis, u)
    }

    pub(crate) fn section_radius(&self, basis: &DMatrix<f64>, u: &[f64]) -> Result<f64> {
        let q = self.group.dim();
        let n = basis.ncols();
        let mut scratch = NormScratch::default();
        let rho = self.norm_with(u, &mut scratch) + 1.0;
        let reach = self.global_radius(rho);
        let neg_u: Vec<f64> = u.iter().map(|v| -v).collect();
        let mut point = vec![0.0; q];
        let mut v = vec![0.0; q];
        let mut inside = |coords: &[f64], scratch: &mut NormScratch| {
            for (i, vi) in v.iter_mut().enumerate() {
                *vi = (0..n).map(|k| basis[(i, k)] * coords[k]).sum();
            }
            self.group.mul_into(&neg_u, &v, &mut point, &mut scratch.group);
            self.in_ball(&point, 1.0, scratch)
        };

        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for k in 0..n {
            for sign in [1.0, -1.0] {
                let mut d = vec![0.0; n];
                d[k] = sign;
                dirs.push(d);
            }
        }
        let mut rng = sampling::stream(0, &[sampling::label("ball_bounding_radius")]);
        let extra = if n == 1 { 0 } else { 96 * n };
        for _ in 0..extra {
            let mut d = vec![0.0; n];
            sampling::unit_sphere_point(&mut rng, &mut d);
            dirs.push(d);
        }

        const STEPS: usize = 256;
        let mut best: f64 = 0.0;
        let mut found = false;
        let mut c = vec![0.0; n];
        for d in &dirs {
            let mut last_in: Option<usize> = None;
            for k in 0..=STEPS {
                let t = reach * k as f64 / STEPS as f64;
                c.iter_mut().zip(d).for_each(|(ci, di)| *ci = t * di);
                if inside(&c, &mut scratch) {
                    last_in = Some(k);
                }
            }
            let Some(k) = last_in else { continue };
            found = true;
            let mut lo = reach * k as f64 / STEPS as f64;
            let mut hi = if k == STEPS { lo } else { reach * (k + 1) as f64 / STEPS as f64 };
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                c.iter_mut().zip(d).for_each(|(ci, di)| *ci = mid * di);
                if inside(&c, &mut scratch) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            best = best.max(lo);
        }
        if !found {
            // Thin sections may slip between rays; probe the reach ball.
            for _ in 0..4096 {
                sampling::unit_ball_point(&mut rng, &mut c);
                c.iter_mut().for_each(|ci| *ci *= reach);
                if inside(&c, &mut scratch) {
                    found = true;
                    best = best.max(c.iter().map(|x| x * x).sum::<f64>().sqrt());
                }
            }
        }
        if !found {
            return Err(Error::EmptySection);
        }
        if best == 0.0 {
            // Only the origin of S was hit: a degenerate touching section.
            return Err(Error::EmptySection);
        }
        Ok(1.5 * best)
    }

    /// Random point with per-layer random scales, normalized to the unit
    /// sphere of the norm.
    pub(crate) fn random_unit_point<R: Rng>(&self, rng: &mut R, scratch: &mut NormScratch) -> Vec<f64> {
        let q = self.group.dim();
        loop {
            let mut x = vec![0.0; q];
            sampling::unit_sphere_point(rng, &mut x);
            for j in 1..=self.group.step() {
                let scale = if rng.random::<f64>() < 0.15 {
                    0.0
                } else {
                    (rng.random_range(-4.0..4.0_f64)).exp()
                };
                for i in self.group.layer_range(j) {
                    x[i] *= scale;
                }
            }
            let nx = self.norm_with(&x, scratch);
            if nx > 0.0 && nx.is_finite() {
                return self.group.dilate_unchecked(1.0 / nx, &x);
            }
        }
    }

    /// Samples pairs (a, b) with ‖a‖ = 1, ‖b‖ = s and reports the worst
    /// ratio ‖ab‖ / (‖a‖ + ‖b‖). Sampling can only find violations, never
    /// prove their absence.
    pub fn verify_distance_axioms(&self, samples: usize, seed: u64) -> AxiomReport {
        let task = sampling::label("verify_distance_axioms");
        let parts = sampling::map_chunks(samples, |c, range| {
            let mut rng = sampling::stream(seed, &[task, c as u64]);
            let mut scratch = NormScratch::default();
            let mut worst: f64 = 0.0;
            let mut violations = 0usize;
            for _ in range {
                let a = self.random_unit_point(&mut rng, &mut scratch);
                let b_hat = self.random_unit_point(&mut rng, &mut scratch);
                let s = (rng.random_range(-3.0..3.0_f64)).exp();
                let b = self.group.dilate_unchecked(s, &b_hat);
                let ab = self.group.mul(&a, &b);
                let ratio = self.norm_with(&ab, &mut scratch) / (1.0 + s);
                worst = worst.max(ratio);
                if ratio > 1.0 + TRIANGLE_SLACK {
                    violations += 1;
                }
            }
            (worst, violations)
        });
        let worst_ratio = parts.iter().map(|p| p.0).fold(0.0, f64::max);
        let triangle_violations = parts.iter().map(|p| p.1).sum();
        AxiomReport {
            samples,
            seed,
            triangle_violations,
            worst_ratio,
            passed: triangle_violations == 0,
        }
    }
}

/// Floor of the box-weight search.
pub const BOX_FLOOR: f64 = 1e-3;

/// Box weights with ε_1 = 1 and each later ε_j the largest value in
/// [floor, 1] (bisection in log scale) whose sampled triangle check finds
/// no violation, with not-yet-calibrated layers held at the floor.
pub fn calibrate_box(group: Arc<GradedGroup>, samples: usize, seed: u64) -> Result<Vec<f64>> {
    let step = group.step();
    let mut eps = vec![BOX_FLOOR; step];
    eps[0] = 1.0;
    for j in 1..step {
        let passes = |value: f64, eps: &mut Vec<f64>| -> Result<bool> {
            eps[j] = value;
            let d = HomogeneousDistance::new(group.clone(), DistanceKind::Box { eps: eps.clone() })?;
            Ok(d.verify_distance_axioms(samples, sampling::derive(seed, &[j as u64])).passed)
        };
        if passes(1.0, &mut eps)? {
            eps[j] = 1.0;
            continue;
        }
        if !passes(BOX_FLOOR, &mut eps)? {
            return Err(Error::CalibrationFailed {
                layer: j + 1,
                floor: BOX_FLOOR,
            });
        }
        let (mut lo, mut hi) = (BOX_FLOOR.ln(), 0.0_f64);
        for _ in 0..24 {
            let mid = 0.5 * (lo + hi);
            if passes(mid.exp(), &mut eps)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        eps[j] = lo.exp();
    }
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::catalog;

    fn h1() -> Arc<GradedGroup> {
        Arc::new(catalog::heisenberg(1).unwrap())
    }

    fn boxd(eps: &[f64]) -> HomogeneousDistance {
        HomogeneousDistance::new(h1(), DistanceKind::Box { eps: eps.to_vec() }).unwrap()
    }

    #[test]
    fn closed_forms() {
        let g = Arc::new(catalog::htype(catalog::CompositionAlgebra::Complex).unwrap());
        let ck = HomogeneousDistance::new(g, DistanceKind::CyganKoranyi { weight: 16.0 }).unwrap();
        assert!((ck.norm(&[0.0, 0.0, 0.25]) - 1.0).abs() < 1e-15);
        assert!((ck.norm(&[0.0, 0.0, 4.0]) - 4.0).abs() < 1e-14);
        let b = boxd(&[1.0, 0.5]);
        assert!((b.norm(&[0.0, 0.0, 16.0]) - 2.0).abs() < 1e-15);
        assert!((b.norm(&[3.0, 4.0, 0.0]) - 5.0).abs() < 1e-15);
        assert_eq!(b.distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn gauge_of_homogeneous_profile_is_the_profile() {
        let spec = DistanceSpec {
            kind: "multiradial".into(),
            params: vec![],
            phi_expr: Some("max(a1, 2 * a2^(1/2))".into()),
        };
        let m = HomogeneousDistance::from_spec(h1(), &spec).unwrap();
        let b = boxd(&[1.0, 2.0]);
        for x in [[0.3, -0.2, 0.9], [1.0, 0.0, 0.0], [0.0, 0.0, -2.0]] {
            assert!((m.norm(&x) - b.norm(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn euclidean_ball_gauge() {
        let d = HomogeneousDistance::new(h1(), DistanceKind::EuclideanBall { radius: 0.5 }).unwrap();
        // Boundary points have norm 1.
        assert!((d.norm(&[0.3, 0.4, 0.0]) - 1.0).abs() < 1e-12);
        assert!((d.norm(&[0.0, 0.0, 0.5]) - 1.0).abs() < 1e-12);
        let x = [0.2, -0.7, 1.3];
        let r = 2.7;
        assert!((d.norm(&d.group.dilate(r, &x).unwrap()) - r * d.norm(&x)).abs() < 1e-12);
    }

    #[test]
    fn invalid_profiles() {
        let mk = |src: &str| {
            HomogeneousDistance::from_spec(
                h1(),
                &DistanceSpec {
                    kind: "multiradial".into(),
                    params: vec![],
                    phi_expr: Some(src.into()),
                },
            )
        };
        assert!(matches!(mk("a1 - a2"), Err(Error::InvalidPhi(_))));
        assert!(matches!(mk("a1"), Err(Error::InvalidPhi(_))));
        assert!(matches!(mk("2 + a1 + a2"), Err(Error::InvalidPhi(_))));
        assert!(matches!(mk("a1 + a3"), Err(Error::ParseError { .. })));
    }

    #[test]
    fn bounding_radius_examples() {
        let d = HomogeneousDistance::new(h1(), DistanceKind::EuclideanBall { radius: 0.7 }).unwrap();
        let g = d.group().clone();
        let s = Subspace::coordinate(&g, &[0, 2]).unwrap();
        let r = d.ball_bounding_radius(&s, &[0.0; 3]).unwrap();
        assert!((r - 1.5 * 0.7).abs() < 1e-9);

        let b = boxd(&[1.0, 1.0]);
        let r = b.ball_bounding_radius(&s, &[0.0; 3]).unwrap();
        assert!(r <= 1.5 * 2f64.sqrt() + 1e-9 && r > 1.5 * 1.4);

        let far = [0.0, 10.0, 0.0];
        let s13 = Subspace::coordinate(&g, &[0, 2]).unwrap();
        assert!(matches!(b.ball_bounding_radius(&s13, &far), Err(Error::EmptySection)));
    }

    #[test]
    fn box_axioms() {
        assert!(boxd(&[1.0, 1.0]).verify_distance_axioms(20000, 1).passed);
        let bad = boxd(&[1.0, 10.0]).verify_distance_axioms(20000, 1);
        assert!(!bad.passed && bad.worst_ratio > 1.5);
        let ab = HomogeneousDistance::new(
            Arc::new(catalog::abelian(3).unwrap()),
            DistanceKind::EuclideanBall { radius: 1.0 },
        )
        .unwrap();
        assert!(ab.verify_distance_axioms(20000, 2).passed);
    }

    #[test]
    fn calibration() {
        assert_eq!(calibrate_box(Arc::new(catalog::abelian(2).unwrap()), 1000, 0).unwrap(), vec![1.0]);
        let eps = calibrate_box(h1(), 20000, 3).unwrap();
        assert_eq!(eps[0], 1.0);
        assert!(eps[1] > 0.0 && eps[1] <= 1.0);
    }

    #[test]
    fn convexity_flags() {
        assert_eq!(boxd(&[1.0, 1.0]).convexity(), Convexity::Convex);
        let spec = DistanceSpec {
            kind: "multiradial".into(),
            params: vec![],
            phi_expr: Some("a1 + a2".into()),
        };
        assert_eq!(
            HomogeneousDistance::from_spec(h1(), &spec).unwrap().convexity(),
            Convexity::Unknown
        );
    }
}
