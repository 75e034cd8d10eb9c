//! Group-law residual suite and the catalog listing.

use hgroup::algebra::catalog;
use hgroup::measure::Verdict;
use hgroup::sampling::{self, label, map_chunks};
use hgroup::GradedGroup;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Residual bound of the group-law checks.
pub const LAW_TOLERANCE: f64 = 1e-9;

/// Largest group dimension for which Q_n is checked by enumerating subsets.
const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LawResiduals {
    pub associativity: f64,
    pub inverse: f64,
    pub dilation: f64,
    pub frame_homogeneity: f64,
}

impl LawResiduals {
    fn max(self, o: Self) -> Self {
        Self {
            associativity: self.associativity.max(o.associativity),
            inverse: self.inverse.max(o.inverse),
            dilation: self.dilation.max(o.dilation),
            frame_homogeneity: self.frame_homogeneity.max(o.frame_homogeneity),
        }
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1.0_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Worst relative residuals of (xy)z = x(yz), x x⁻¹ = x⁻¹ x = 0,
/// δ_r(xy) = δ_r x δ_r y and X_i(δ_r x) = r^{d_i} δ_r* X_i(x) over random
/// x, y, z ∈ [−2, 2]^q and r ∈ [0.1, 3].
pub fn law_residuals(g: &GradedGroup, samples: usize, seed: u64) -> LawResiduals {
    let q = g.dim();
    let d = g.degrees();
    let task = label("law_residuals");
    let parts = map_chunks(samples, |c, range| {
        let mut rng = sampling::stream(seed, &[task, c as u64]);
        let mut worst = LawResiduals::default();
        for _ in range {
            let mut point = || -> Vec<f64> { (0..q).map(|_| rng.random_range(-2.0..2.0)).collect() };
            let (x, y, z) = (point(), point(), point());
            let r: f64 = rng.random_range(0.1..3.0);
            let assoc = rel_diff(&g.mul(&g.mul(&x, &y), &z), &g.mul(&x, &g.mul(&y, &z)));
            let xi = g.inverse(&x);
            let zero = vec![0.0; q];
            let inv = rel_diff(&g.mul(&x, &xi), &zero).max(rel_diff(&g.mul(&xi, &x), &zero));
            let delta = |v: &[f64]| g.dilate(r, v).expect("r is positive");
            let dil = rel_diff(&delta(&g.mul(&x, &y)), &g.mul(&delta(&x), &delta(&y)));
            let f = g.left_invariant_frame(&x);
            let fr = g.left_invariant_frame(&delta(&x));
            let mut frame: f64 = 0.0;
            for l in 0..q {
                for i in 0..q {
                    let expect = r.powi(d[l] as i32 - d[i] as i32) * f[(l, i)];
                    frame = frame.max((fr[(l, i)] - expect).abs() / expect.abs().max(1.0));
                }
            }
            worst = worst.max(LawResiduals {
                associativity: assoc,
                inverse: inv,
                dilation: dil,
                frame_homogeneity: frame,
            });
        }
        worst
    });
    parts.into_iter().fold(LawResiduals::default(), LawResiduals::max)
}

/// max Σ_{i∈I} d_i over index sets with |I| = n, by enumeration.
pub fn brute_force_q_n(g: &GradedGroup, n: usize) -> Option<usize> {
    let q = g.dim();
    if q > BRUTE_FORCE_LIMIT {
        return None;
    }
    let d = g.degrees();
    (0u32..(1 << q))
        .filter(|mask| mask.count_ones() as usize == n)
        .map(|mask| (0..q).filter(|i| mask >> i & 1 == 1).map(|i| d[i]).sum())
        .max()
}

fn absolute(name: &str, lhs: f64, rhs: f64, tol: f64) -> Verdict {
    Verdict {
        name: name.into(),
        passed: (lhs - rhs).abs() <= tol,
        advisory: false,
        tolerance: tol,
        tolerance_kind: "absolute".into(),
        lhs,
        rhs,
        note: None,
    }
}

/// Group-law residual verdicts plus the Q_n closed form against enumeration.
pub fn group_law_verdicts(g: &GradedGroup, samples: usize, seed: u64) -> (LawResiduals, Vec<Verdict>) {
    let r = law_residuals(g, samples, seed);
    let mut verdicts = vec![
        absolute("associativity", r.associativity, 0.0, LAW_TOLERANCE),
        absolute("inverse", r.inverse, 0.0, LAW_TOLERANCE),
        absolute("dilation_automorphism", r.dilation, 0.0, LAW_TOLERANCE),
        absolute("frame_homogeneity", r.frame_homogeneity, 0.0, LAW_TOLERANCE),
    ];
    for n in 1..=g.dim() {
        let name = format!("q_n[{n}]");
        let closed = g.q_n(n) as f64;
        verdicts.push(match brute_force_q_n(g, n) {
            Some(b) => absolute(&name, closed, b as f64, 0.0),
            None => absolute(&name, closed, closed, 0.0).advisory("group too large to enumerate"),
        });
    }
    (r, verdicts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub name: String,
    pub dim: usize,
    pub step: usize,
    pub layers: Vec<usize>,
    pub homogeneous_dim: usize,
    /// Q_n for n = 1..=dim.
    pub q_n: Vec<usize>,
}

impl GroupSummary {
    pub fn of(g: &GradedGroup) -> Self {
        Self {
            name: g.name().to_string(),
            dim: g.dim(),
            step: g.step(),
            layers: g.layer_dims().to_vec(),
            homogeneous_dim: g.homogeneous_dim(),
            q_n: (1..=g.dim()).map(|n| g.q_n(n)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEntry {
    pub kind: String,
    pub params: String,
    pub convex_ball: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub groups: Vec<GroupSummary>,
    pub distances: Vec<DistanceEntry>,
}

pub fn catalog() -> Catalog {
    let groups = catalog::listing()
        .iter()
        .map(|name| GroupSummary::of(&catalog::by_name(name).expect("listed groups build")))
        .collect();
    let entry = |kind: &str, params: &str, convex: &str| DistanceEntry {
        kind: kind.into(),
        params: params.into(),
        convex_ball: convex.into(),
    };
    let distances = vec![
        entry("box", "eps_1..eps_step (default all 1)", "yes"),
        entry("cygan_koranyi", "weight (default 16), step 2 only", "yes"),
        entry("euclidean_ball", "radius r0 (default 1)", "yes"),
        entry("multiradial", "phi_expr in a1..a_step", "unknown"),
    ];
    Catalog { groups, distances }
}

pub fn format_catalog(c: &Catalog) -> String {
    let mut out = format!("{:<18} {:>3} {:>4} {:>10} {:>3}  Q_n (n = 1..q)\n", "group", "q", "step", "layers", "Q");
    for g in &c.groups {
        let layers: Vec<String> = g.layers.iter().map(|h| h.to_string()).collect();
        let qn: Vec<String> = g.q_n.iter().map(|v| v.to_string()).collect();
        out += &format!(
            "{:<18} {:>3} {:>4} {:>10} {:>3}  {}\n",
            g.name,
            g.dim,
            g.step,
            layers.join(","),
            g.homogeneous_dim,
            qn.join(" ")
        );
    }
    out += "\ndistance          convex ball  parameters\n";
    for d in &c.distances {
        out += &format!("{:<17} {:<12} {}\n", d.kind, d.convex_ball, d.params);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heisenberg_rows() {
        let c = catalog();
        let row = |name: &str| c.groups.iter().find(|g| g.name == name).unwrap().clone();
        let h1 = row("heisenberg(1)");
        assert_eq!((h1.dim, h1.step, h1.homogeneous_dim), (3, 2, 4));
        assert_eq!(h1.q_n, vec![2, 3, 4]);
        let h2 = row("heisenberg(2)");
        assert_eq!((h2.dim, h2.homogeneous_dim, h2.q_n[2]), (5, 6, 4));
        assert_eq!(row("abelian(3)").q_n, vec![1, 2, 3]);
    }

    #[test]
    fn residuals_are_small_on_heisenberg() {
        let g = catalog::heisenberg(1).unwrap();
        let (r, verdicts) = group_law_verdicts(&g, 500, 1);
        assert!(r.associativity < 1e-12);
        assert!(verdicts.iter().all(|v| v.passed));
    }
}
