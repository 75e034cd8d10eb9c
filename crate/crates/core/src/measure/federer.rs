use rand::Rng;
use serde::{Deserialize, Serialize};

use super::intrinsic::{DensityScratch, IntrinsicDensity};
use super::Estimate;
use crate::algebra::Scratch;
use crate::error::{Error, Result};
use crate::manifold::ParamMap;
use crate::metrics::{HomogeneousDistance, NormScratch};
use crate::numeric::Policy;
use crate::sampling::{self, derive, label, map_chunks};

/// Minimum sample hits in B(p, r) for a usable ratio.
pub const HIT_FLOOR: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FedererOptions {
    pub radii: Vec<f64>,
    /// Candidate centers per radius, including z = p and the guides.
    pub centers_per_radius: usize,
    /// Parameter samples per radius.
    pub samples: usize,
    pub seed: u64,
    /// Degree N of the ratio μ(B)/r^N; the pointwise degree at y0 if absent.
    pub degree: Option<usize>,
    /// Offsets v with ‖v‖ ≤ 1 tried as centers p·δ_r(v) at every radius.
    pub guides: Vec<Vec<f64>>,
    pub boundary_samples: usize,
}

impl Default for FedererOptions {
    fn default() -> Self {
        Self {
            radii: (0..7).map(|k| 0.1 * 10f64.powf(-0.5 * k as f64)).collect(),
            centers_per_radius: 8,
            samples: 200_000,
            seed: 0,
            degree: None,
            guides: Vec::new(),
            boundary_samples: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusRow {
    pub radius: f64,
    /// sup over candidate centers of μ(B(z, r)) / r^N.
    pub ratio: f64,
    pub stderr: f64,
    /// Samples of the best center inside its ball.
    pub hits: u64,
    pub center: Vec<f64>,
    /// Parameter box half-widths around y0.
    pub half_widths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FedererReport {
    pub estimate: Estimate,
    pub degree: usize,
    pub chosen_radius: f64,
    /// Some radius has a flat two-decade window above it.
    pub flat: bool,
    /// The window starting at the smallest radius is flat.
    pub flat_last_two_decades: bool,
    pub trace: Vec<RadiusRow>,
}

struct Ball<'a> {
    d: &'a HomogeneousDistance,
    center_inv: Vec<f64>,
    radius: f64,
}

impl Ball<'_> {
    fn contains(&self, x: &[f64], tmp: &mut [f64], gs: &mut Scratch, ns: &mut NormScratch) -> bool {
        self.d.group().mul_into(&self.center_inv, x, tmp, gs);
        self.d.in_ball(tmp, self.radius, ns)
    }
}

/// Grows a parameter box around y0 until no sampled boundary point maps into `ball`.
fn parameter_box(
    map: &ParamMap,
    y0: &[f64],
    ball: &Ball,
    boundary_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = map.n();
    let q = map.group().dim();
    let mut h = vec![ball.radius.powi(map.group().step() as i32).min(ball.radius) * 1e-3; n];
    let mut rng = sampling::stream(seed, &[label("parameter_box")]);
    let mut tmp = vec![0.0; q];
    let mut x = vec![0.0; q];
    let (mut gs, mut ns, mut ps) = (Scratch::default(), NormScratch::default(), Default::default());
    for _ in 0..200 {
        for (k, (&c, [lo, hi])) in y0.iter().zip(map.domain()).enumerate() {
            if c - h[k] < *lo || c + h[k] > *hi {
                return Err(Error::BoundaryTooClose(ball.radius));
            }
        }
        let mut grow = vec![false; n];
        for (k, g) in grow.iter_mut().enumerate() {
            for side in [-1.0, 1.0] {
                for _ in 0..boundary_samples {
                    let y: Vec<f64> = (0..n)
                        .map(|i| {
                            if i == k {
                                y0[i] + side * h[i]
                            } else {
                                y0[i] + h[i] * (2.0 * rng.random::<f64>() - 1.0)
                            }
                        })
                        .collect();
                    map.eval_into(&y, &mut x, &mut ps)?;
                    if ball.contains(&x, &mut tmp, &mut gs, &mut ns) {
                        *g = true;
                        break;
                    }
                }
            }
        }
        if !grow.contains(&true) {
            return Ok(h);
        }
        for (hk, g) in h.iter_mut().zip(&grow) {
            if *g {
                *hk *= 2.0;
            }
        }
    }
    Err(Error::BoundaryTooClose(ball.radius))
}

/// Smallest radius whose ratios over the following two decades agree with
/// its own within 3 combined standard errors.
fn flat_index(rows: &[RadiusRow]) -> (Option<usize>, bool) {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|a, b| rows[*a].radius.total_cmp(&rows[*b].radius));
    let flat_at = |i: usize| -> Option<bool> {
        let r = rows[i].radius;
        let window: Vec<&RadiusRow> = rows
            .iter()
            .filter(|row| row.radius >= r && row.radius <= 100.0 * r * (1.0 + 1e-9))
            .collect();
        let span = window.iter().map(|w| w.radius).fold(0.0, f64::max) / r;
        if span < 100.0 * (1.0 - 1e-9) {
            return None;
        }
        Some(window.iter().all(|w| {
            (w.ratio - rows[i].ratio).abs() <= 3.0 * w.stderr.hypot(rows[i].stderr)
        }))
    };
    let last = order.first().and_then(|&i| flat_at(i)).unwrap_or(false);
    let chosen = order.into_iter().find(|&i| flat_at(i) == Some(true));
    (chosen, last)
}

/// Federer density estimate of μ_Σ at Ψ(y0): for each radius r, the largest
/// μ_Σ(B(z, r)) / r^N over sampled centers z ∈ B(Ψ(y0), r).
pub fn federer_density(
    map: &ParamMap,
    d: &HomogeneousDistance,
    y0: &[f64],
    opts: &FedererOptions,
    policy: &Policy,
) -> Result<FedererReport> {
    let group = map.group();
    if !same_group(group, d.group()) {
        return Err(Error::InvalidArgument("distance and submanifold live on different groups".into()));
    }
    if opts.radii.is_empty() || opts.radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    if opts.samples == 0 || opts.centers_per_radius == 0 {
        return Err(Error::InvalidArgument("samples and centers must be positive".into()));
    }
    let q = group.dim();
    let n = map.n();
    let p = map.eval(y0)?;
    let degree = match opts.degree {
        Some(deg) => deg,
        None => map.pointwise_degree(y0, policy)?,
    };
    let density = IntrinsicDensity::new(map, degree);
    let task = label("federer_density");
    let mut trace = Vec::with_capacity(opts.radii.len());

    for (ri, &r) in opts.radii.iter().enumerate() {
        let seed = derive(opts.seed, &[task, ri as u64]);
        let outer = Ball { d, center_inv: group.inverse(&p), radius: 2.0 * r };
        let h = parameter_box(map, y0, &outer, opts.boundary_samples, seed)?;
        let volume: f64 = h.iter().map(|v| 2.0 * v).product();

        // Samples landing in B(p, 2r), which contains every candidate ball.
        let chunks = map_chunks(opts.samples, |c, range| -> Result<Vec<(Vec<f64>, f64)>> {
            let mut rng = sampling::stream(seed, &[label("samples"), c as u64]);
            let mut s = DensityScratch::default();
            let (mut gs, mut ns) = (Scratch::default(), NormScratch::default());
            let mut tmp = vec![0.0; q];
            let mut y = vec![0.0; n];
            let mut out = Vec::new();
            for _ in range {
                for k in 0..n {
                    y[k] = y0[k] + h[k] * (2.0 * rng.random::<f64>() - 1.0);
                }
                let mut x = vec![0.0; q];
                let rho = density.eval_into(&y, &mut x, &mut s)?;
                if outer.contains(&x, &mut tmp, &mut gs, &mut ns) {
                    out.push((x, rho));
                }
            }
            Ok(out)
        });
        let mut points = Vec::new();
        for c in chunks {
            points.extend(c?);
        }

        let mut rng = sampling::stream(seed, &[label("centers")]);
        let mut ns = NormScratch::default();
        let mut offsets: Vec<Vec<f64>> = vec![vec![0.0; q]];
        offsets.extend(opts.guides.iter().filter(|v| v.len() == q).cloned());
        while offsets.len() < opts.centers_per_radius {
            let unit = d.random_unit_point(&mut rng, &mut ns);
            offsets.push(group.dilate_unchecked(rng.random::<f64>(), &unit));
        }
        offsets.truncate(opts.centers_per_radius.max(1 + opts.guides.len()));

        let mut best: Option<RadiusRow> = None;
        for (ci, v) in offsets.iter().enumerate() {
            let z = group.mul(&p, &group.dilate_unchecked(r, v));
            let ball = Ball { d, center_inv: group.inverse(&z), radius: r };
            let sums = map_chunks(points.len(), |_, range| {
                let (mut gs, mut ns) = (Scratch::default(), NormScratch::default());
                let mut tmp = vec![0.0; q];
                let (mut sum, mut sq, mut hits) = (0.0, 0.0, 0u64);
                for (x, rho) in &points[range] {
                    if ball.contains(x, &mut tmp, &mut gs, &mut ns) {
                        let v = volume * rho;
                        sum += v;
                        sq += v * v;
                        hits += 1;
                    }
                }
                (sum, sq, hits)
            });
            let (sum, sq, hits) = sums
                .into_iter()
                .fold((0.0, 0.0, 0u64), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
            if ci == 0 && hits < HIT_FLOOR {
                return Err(Error::RadiusTooSmall { hits: hits as usize, floor: HIT_FLOOR as usize, radius: r });
            }
            let est = Estimate::from_sums(sum, sq, opts.samples as u64, seed, "monte-carlo");
            let scale = r.powi(degree as i32);
            let row = RadiusRow {
                radius: r,
                ratio: est.value / scale,
                stderr: est.stderr / scale,
                hits,
                center: z,
                half_widths: h.clone(),
            };
            if best.as_ref().is_none_or(|b| row.ratio > b.ratio) {
                best = Some(row);
            }
        }
        trace.push(best.expect("at least one center"));
    }

    let (chosen, last_flat) = flat_index(&trace);
    let pick = chosen.unwrap_or_else(|| {
        (0..trace.len())
            .min_by(|a, b| trace[*a].radius.total_cmp(&trace[*b].radius))
            .unwrap_or(0)
    });
    let row = &trace[pick];
    Ok(FedererReport {
        estimate: Estimate {
            value: row.ratio,
            stderr: row.stderr,
            samples: (opts.samples * opts.radii.len()) as u64,
            seed: opts.seed,
            method: "federer-trace".into(),
        },
        degree,
        chosen_radius: row.radius,
        flat: chosen.is_some(),
        flat_last_two_decades: last_flat,
        trace,
    })
}

fn same_group(a: &crate::GradedGroup, b: &crate::GradedGroup) -> bool {
    std::ptr::eq(a, b) || a.definition() == b.definition()
}
