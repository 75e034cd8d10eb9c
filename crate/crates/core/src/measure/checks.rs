use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::covering::{covering_estimate, CoveringReport};
use super::federer::{federer_density, FedererOptions, FedererReport};
use super::intrinsic::{intrinsic_measure, region_degree, Quadrature};
use super::section::{spherical_factor, BetaOptions, SphericalFactor};
use super::{Estimate, Verdict};
use crate::algebra::{GradedGroup, Scratch, Subspace};
use crate::error::{Error, Result};
use crate::expr::{self, EvalScratch};
use crate::manifold::{covered_case, BlowupCase, ParamMap, PointAnalysis};
use crate::metrics::{Convexity, HomogeneousDistance, NormScratch};
use crate::numeric::{norm2, unit_ball_volume, Policy};
use crate::sampling::{self, derive, label, map_chunks, map_indexed};

// ---------------------------------------------------------------- area

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringOptions {
    pub delta: f64,
    pub cloud_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AreaOptions {
    pub quadrature: Quadrature,
    pub beta: BetaOptions,
    pub federer: FedererOptions,
    /// Relative tolerance of θ against β.
    pub tolerance: f64,
    /// Relative band of the covering sum against μ/β.
    pub covering_band: f64,
    pub covering: Option<CoveringOptions>,
    /// Master seed; the seeds inside `beta` and `federer` are replaced by
    /// per-probe seeds derived from it.
    pub seed: u64,
}

impl Default for AreaOptions {
    fn default() -> Self {
        Self {
            quadrature: Quadrature::TensorGrid { resolution: 32 },
            beta: BetaOptions::default(),
            federer: FedererOptions::default(),
            tolerance: 0.05,
            covering_band: 0.15,
            covering: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub y: Vec<f64>,
    pub analysis: Option<PointAnalysis>,
    pub case: Option<BlowupCase>,
    pub beta: Option<SphericalFactor>,
    pub federer: Option<FedererReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    pub degree: usize,
    pub measure: Estimate,
    pub probes: Vec<ProbeReport>,
    pub covering: Option<CoveringReport>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

fn skipped(y: &[f64], analysis: Option<PointAnalysis>, note: String) -> ProbeReport {
    ProbeReport {
        y: y.to_vec(),
        analysis,
        case: None,
        beta: None,
        federer: None,
        note: Some(note),
    }
}

/// Intrinsic measure of Ψ(region), and at each probe the Federer density θ
/// against the spherical factor β of the homogeneous tangent. Probes outside
/// the covered cases give advisory verdicts.
pub fn area_check(
    map: &ParamMap,
    d: &HomogeneousDistance,
    region: &[[f64; 2]],
    probes: &[Vec<f64>],
    opts: &AreaOptions,
    policy: &Policy,
) -> Result<AreaReport> {
    let group = map.group();
    let degree = region_degree(map, region, policy)?;
    let measure = intrinsic_measure(map, region, opts.quadrature, Some(degree), None, policy)?;
    let mut reports = Vec::with_capacity(probes.len());
    let mut verdicts = Vec::new();
    let mut betas = Vec::new();

    for (i, y) in probes.iter().enumerate() {
        let name = format!("theta_vs_beta[{i}]");
        let advisory = |note: &str| Verdict::relative(&name, 0.0, 0.0, opts.tolerance).advisory(note);
        let analysis = match map.classify_point(y, policy, Some(degree)) {
            Ok(a) => a,
            Err(e) => {
                let note = format!("probe not analyzable: {e}");
                verdicts.push(advisory(&note));
                reports.push(skipped(y, None, note));
                continue;
            }
        };
        let Some(case) = covered_case(&analysis, group.step(), map.n()) else {
            let note = format!("hypotheses fail at this point (class {})", analysis.classification.label());
            verdicts.push(advisory(&note));
            reports.push(skipped(y, Some(analysis), note));
            continue;
        };
        let Some(columns) = analysis.htangent.clone() else {
            let note = "homogeneous tangent not available".to_string();
            verdicts.push(advisory(&note));
            reports.push(skipped(y, Some(analysis), note));
            continue;
        };
        let cols: Vec<DVector<f64>> = columns.iter().map(|c| DVector::from_column_slice(c)).collect();
        let tangent = Subspace::new(group, DMatrix::from_columns(&cols))?;
        let beta_opts = BetaOptions {
            seed: derive(opts.seed, &[label("beta"), i as u64]),
            ..opts.beta.clone()
        };
        let beta = spherical_factor(d, &tangent, &beta_opts)?;
        let mut fed_opts = opts.federer.clone();
        fed_opts.seed = derive(opts.seed, &[label("federer"), i as u64]);
        fed_opts.degree = Some(degree);
        if beta.argmax.iter().any(|v| *v != 0.0) {
            fed_opts.guides.push(beta.argmax.clone());
        }
        let theta = federer_density(map, d, y, &fed_opts, policy)?;

        let mut v = Verdict::relative(&name, theta.estimate.value, beta.estimate.value, opts.tolerance);
        v.note = Some(format!("{case:?} case, density factor 1"));
        verdicts.push(v);
        let flat = theta.flat_last_two_decades;
        verdicts.push(Verdict {
            name: format!("trace_flat[{i}]"),
            passed: flat,
            advisory: false,
            tolerance: 3.0,
            tolerance_kind: "sigma".into(),
            lhs: theta.trace.last().map_or(0.0, |r| r.ratio),
            rhs: theta.estimate.value,
            note: Some("last two decades of the radius trace agree within 3 standard errors".into()),
        });
        betas.push(beta.estimate.value);
        reports.push(ProbeReport {
            y: y.clone(),
            analysis: Some(analysis),
            case: Some(case),
            beta: Some(beta),
            federer: Some(theta),
            note: None,
        });
    }

    let mut covering = None;
    if let (Some(c), false) = (&opts.covering, betas.is_empty()) {
        let beta = betas.iter().sum::<f64>() / betas.len() as f64;
        let seed = derive(opts.seed, &[label("covering")]);
        match covering_estimate(map, d, region, degree, c.delta, c.cloud_size, seed) {
            Ok(rep) => {
                verdicts.push(
                    Verdict::relative("covering_vs_measure", rep.estimate.value, measure.value / beta, opts.covering_band)
                        .advisory("greedy cover is an upper proxy of the spherical measure"),
                );
                covering = Some(rep);
            }
            Err(e) => verdicts.push(
                Verdict::relative("covering_vs_measure", 0.0, measure.value / beta, opts.covering_band)
                    .advisory(&format!("covering not computed: {e}")),
            ),
        }
    }
    let passed = verdicts.iter().all(|v| v.advisory || v.passed);
    Ok(AreaReport {
        degree,
        measure,
        probes: reports,
        covering,
        verdicts,
        passed,
    })
}

// ---------------------------------------------------------- concavity

/// Convex body whose sections are measured.
#[derive(Debug, Clone)]
pub enum ConvexBody<'a> {
    /// Closed unit ball of a distance with a convex unit ball.
    MetricBall(&'a HomogeneousDistance),
    /// [−half, half]^q.
    Cube { half: f64 },
    /// Σ (x_i / a_i)² ≤ 1.
    Ellipsoid { semi_axes: Vec<f64> },
}

impl ConvexBody<'_> {
    fn contains(&self, x: &[f64], scratch: &mut NormScratch) -> bool {
        match self {
            Self::MetricBall(d) => d.in_ball(x, 1.0, scratch),
            Self::Cube { half } => x.iter().all(|v| v.abs() <= *half),
            Self::Ellipsoid { semi_axes } => x.iter().zip(semi_axes).map(|(v, a)| (v / a).powi(2)).sum::<f64>() <= 1.0,
        }
    }

    /// Radius of a Euclidean ball around 0 containing the body.
    fn bounding_radius(&self, q: usize) -> f64 {
        match self {
            Self::MetricBall(d) => d.global_radius(1.0),
            Self::Cube { half } => half * (q as f64).sqrt(),
            Self::Ellipsoid { semi_axes } => semi_axes.iter().cloned().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub segments: usize,
    pub comparisons: usize,
    pub violations: usize,
    /// Largest (combination − section root) / combined stderr.
    pub worst_z: f64,
    pub passed: bool,
}

const BODY_ATTEMPTS: usize = 100_000;

/// Checks that ψ(v) = area(C ∩ (v + S))^{1/n} is concave along random
/// segments of S^⊥: ψ at θ ∈ {¼, ½, ¾} may fall below the chord by at most
/// 3 combined standard errors. All five sections of a segment share sample
/// points, and the stderr is combined as if they were independent.
pub fn section_concavity_check(
    body: &ConvexBody,
    s: &Subspace,
    segments: usize,
    samples: usize,
    seed: u64,
) -> Result<ConcavityReport> {
    let q = s.ambient_dim();
    match body {
        ConvexBody::MetricBall(d) => {
            if d.convexity() != Convexity::Convex {
                return Err(Error::NotConvex);
            }
            if d.group().dim() != q {
                return Err(Error::BadDimensions(format!(
                    "subspace lives in R^{q}, group dimension {}",
                    d.group().dim()
                )));
            }
        }
        ConvexBody::Cube { half } if !(*half > 0.0) => {
            return Err(Error::InvalidArgument("cube half-width must be positive".into()));
        }
        ConvexBody::Ellipsoid { semi_axes } if semi_axes.len() != q || semi_axes.iter().any(|a| !(*a > 0.0)) => {
            return Err(Error::InvalidArgument(format!("ellipsoid needs {q} positive semi-axes")));
        }
        _ => {}
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let basis = s.orthonormal();
    let comp = s.complement();
    let n = basis.ncols();
    let m = comp.ncols();
    let radius = body.bounding_radius(q);
    let volume = unit_ball_volume(n) * radius.powi(n as i32);
    let task = label("section_concavity");
    let thetas = [0.25, 0.5, 0.75];

    let results = map_indexed(segments, |i| -> Result<(usize, f64)> {
        let mut rng = sampling::stream(seed, &[task, i as u64]);
        let mut scratch = NormScratch::default();
        let mut x = vec![0.0; q];
        let mut endpoint = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<Vec<f64>> {
            for _ in 0..BODY_ATTEMPTS {
                sampling::unit_ball_point(rng, &mut x);
                x.iter_mut().for_each(|v| *v *= radius);
                if body.contains(&x, &mut scratch) {
                    return Ok((0..m).map(|k| (0..q).map(|r| comp[(r, k)] * x[r]).sum()).collect());
                }
            }
            Err(Error::InvalidArgument("body too thin to sample".into()))
        };
        let v = endpoint(&mut rng)?;
        let w = endpoint(&mut rng)?;
        let mut coords = vec![0.0; n * samples];
        for chunk in coords.chunks_mut(n.max(1)) {
            sampling::unit_ball_point(&mut rng, chunk);
        }

        let centers: Vec<Vec<f64>> = [1.0, 0.0]
            .iter()
            .chain(&thetas)
            .map(|t| v.iter().zip(&w).map(|(a, b)| t * a + (1.0 - t) * b).collect())
            .collect();
        let mut roots = Vec::with_capacity(centers.len());
        for c in &centers {
            let offset: Vec<f64> = (0..q).map(|r| (0..m).map(|k| comp[(r, k)] * c[k]).sum()).collect();
            let mut hits = 0u64;
            for z in coords.chunks(n.max(1)).take(samples) {
                for (r, xr) in x.iter_mut().enumerate() {
                    *xr = offset[r] + radius * (0..n).map(|k| basis[(r, k)] * z[k]).sum::<f64>();
                }
                if body.contains(&x, &mut scratch) {
                    hits += 1;
                }
            }
            let p = hits as f64 / samples as f64;
            let area = volume * p;
            let sigma = volume * (p * (1.0 - p)).max(1.0 / samples as f64).sqrt() / (samples as f64).sqrt();
            let root = |a: f64| a.max(0.0).powf(1.0 / n as f64);
            // Half the spread of the root over ±1σ; stays finite near zero area.
            roots.push((root(area), 0.5 * (root(area + sigma) - root(area - sigma))));
        }

        let (psi_v, sig_v) = roots[0];
        let (psi_w, sig_w) = roots[1];
        let mut violations = 0;
        let mut worst = f64::NEG_INFINITY;
        for (k, t) in thetas.iter().enumerate() {
            let (psi, sig) = roots[2 + k];
            let chord = t * psi_v + (1.0 - t) * psi_w;
            let combined = (sig * sig + (t * sig_v).powi(2) + ((1.0 - t) * sig_w).powi(2)).sqrt();
            let gap = chord - psi;
            let z = if combined > 0.0 {
                gap / combined
            } else if gap > 1e-12 * chord.abs().max(1.0) {
                f64::INFINITY
            } else {
                0.0
            };
            if z > 3.0 {
                violations += 1;
            }
            worst = worst.max(z);
        }
        Ok((violations, worst))
    });

    let mut violations = 0;
    let mut worst_z = f64::NEG_INFINITY;
    for r in results {
        let (v, z) = r?;
        violations += v;
        worst_z = worst_z.max(z);
    }
    if segments == 0 {
        worst_z = 0.0;
    }
    Ok(ConcavityReport {
        segments,
        comparisons: segments * thetas.len(),
        violations,
        worst_z,
        passed: violations == 0,
    })
}

// ------------------------------------------------ vertical translation

/// Subset A of a subspace N, in coordinates of its orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TranslationRegion {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl TranslationRegion {
    fn dim(&self) -> usize {
        match self {
            Self::Box { lo, .. } => lo.len(),
            Self::Ball { center, .. } => center.len(),
        }
    }

    fn contains(&self, s: &[f64]) -> bool {
        match self {
            Self::Box { lo, hi } => s.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b),
            Self::Ball { center, radius } => {
                s.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>() <= radius * radius
            }
        }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Self::Box { lo, hi } => (lo.clone(), hi.clone()),
            Self::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Self::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| (b - a).max(0.0)).product(),
            Self::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationReport {
    /// Closed-form n-volume of A.
    pub exact_volume: f64,
    pub volume: Estimate,
    /// Volume of p·A measured in the plane p + N.
    pub image_volume: Estimate,
    pub z: f64,
    /// Largest distance of a sampled p·x, x ∈ N, from the plane p + N.
    pub coset_residual: f64,
    pub passed: bool,
}

const BOX_GROWTH_ATTEMPTS: usize = 8;

/// Stratified estimate of the volume of {s ∈ [lo, hi] : inside(s)} on a
/// k^n grid with one jittered point per cell. Cells whose corners and jitter
/// agree count as full or empty; the others are hit-or-miss with variance at
/// most 1/4. Returns None when an inside corner sits on the outer face.
fn stratified_volume(
    lo: &[f64],
    hi: &[f64],
    k: usize,
    inside: &(dyn Fn(&[f64]) -> bool + Sync),
    seed: u64,
) -> Option<Estimate> {
    let n = lo.len();
    let width: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / k as f64).collect();
    let cell_volume: f64 = width.iter().product();
    let side = k + 1;
    let corners_total = side.pow(n as u32);
    let corners: Vec<(bool, bool)> = map_chunks(corners_total, |_, range| {
        let mut s = vec![0.0; n];
        range
            .map(|idx| {
                let mut rem = idx;
                let mut face = false;
                for (a, sa) in s.iter_mut().enumerate() {
                    let i = rem % side;
                    rem /= side;
                    face |= i == 0 || i == k;
                    *sa = lo[a] + width[a] * i as f64;
                }
                (inside(&s), face)
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    if corners.iter().any(|&(inn, face)| inn && face) {
        return None;
    }

    let task = label("stratified_volume");
    let cells = k.pow(n as u32);
    let parts = map_chunks(cells, |c, range| {
        let mut rng = sampling::stream(seed, &[task, c as u64]);
        let mut s = vec![0.0; n];
        let mut idx_vec = vec![0usize; n];
        let (mut full, mut mixed, mut mixed_hits) = (0u64, 0u64, 0u64);
        for idx in range {
            let mut rem = idx;
            for (a, ia) in idx_vec.iter_mut().enumerate() {
                *ia = rem % k;
                rem /= k;
                s[a] = lo[a] + width[a] * (*ia as f64 + rng.random::<f64>());
            }
            let jitter = inside(&s);
            let mut all_in = true;
            let mut all_out = true;
            for mask in 0..(1usize << n) {
                let mut flat = 0;
                let mut stride = 1;
                for (a, ia) in idx_vec.iter().enumerate() {
                    flat += (ia + ((mask >> a) & 1)) * stride;
                    stride *= side;
                }
                if corners[flat].0 {
                    all_out = false;
                } else {
                    all_in = false;
                }
            }
            if all_in && jitter {
                full += 1;
            } else if all_out && !jitter {
            } else {
                mixed += 1;
                mixed_hits += jitter as u64;
            }
        }
        (full, mixed, mixed_hits)
    });
    let (full, mixed, hits) = parts
        .into_iter()
        .fold((0, 0, 0), |acc, p| (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2));
    Some(Estimate {
        value: cell_volume * (full + hits) as f64,
        stderr: cell_volume * (mixed as f64).sqrt() / 2.0,
        samples: cells as u64,
        seed,
        method: "stratified-grid".into(),
    })
}

/// Padded bounding box of `f` over a grid of A's bounding box, then grown
/// until the stratified estimate sees no inside corner on its faces.
fn measure_image(
    region: &TranslationRegion,
    k: usize,
    forward: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    inside: &(dyn Fn(&[f64]) -> bool + Sync),
    seed: u64,
) -> Result<Estimate> {
    let n = region.dim();
    let (lo, hi) = region.bounds();
    let per_axis = ((20_000f64).powf(1.0 / n as f64).floor() as usize).max(2);
    let images = map_indexed(per_axis.pow(n as u32), |idx| {
        let mut rem = idx;
        let s: Vec<f64> = (0..n)
            .map(|a| {
                let i = rem % per_axis;
                rem /= per_axis;
                lo[a] + (hi[a] - lo[a]) * i as f64 / (per_axis - 1) as f64
            })
            .collect();
        forward(&s)
    });
    let mut blo = vec![f64::INFINITY; n];
    let mut bhi = vec![f64::NEG_INFINITY; n];
    for t in &images {
        for a in 0..n {
            blo[a] = blo[a].min(t[a]);
            bhi[a] = bhi[a].max(t[a]);
        }
    }
    let mut pad = 0.05;
    for _ in 0..BOX_GROWTH_ATTEMPTS {
        let plo: Vec<f64> = (0..n).map(|a| blo[a] - pad * (bhi[a] - blo[a]) - 1e-9).collect();
        let phi: Vec<f64> = (0..n).map(|a| bhi[a] + pad * (bhi[a] - blo[a]) + 1e-9).collect();
        if let Some(e) = stratified_volume(&plo, &phi, k, inside, seed) {
            return Ok(e);
        }
        pad *= 2.0;
    }
    Err(Error::InvalidArgument("translated region escapes every bounding box tried".into()))
}

/// Compares the n-volume of A ⊂ N with that of p·A measured inside the plane
/// p + N, which contains p·N when N is vertical.
pub fn vertical_translation_check(
    group: &GradedGroup,
    sub: &Subspace,
    p: &[f64],
    region: &TranslationRegion,
    samples: usize,
    seed: u64,
) -> Result<TranslationReport> {
    let q = group.dim();
    if sub.ambient_dim() != q || p.len() != q {
        return Err(Error::BadDimensions(format!("group dimension is {q}")));
    }
    if !sub.classify(group, 1e-9).vertical {
        return Err(Error::NotVertical);
    }
    let basis = sub.orthonormal();
    let n = basis.ncols();
    if region.dim() != n {
        return Err(Error::BadDimensions(format!("region has {} coordinates for a {n}-dimensional subspace", region.dim())));
    }
    if let TranslationRegion::Box { lo, hi } = region {
        if hi.len() != n || lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::InvalidArgument("box needs lo <= hi in every coordinate".into()));
        }
    }
    let k = ((samples.max(1) as f64).powf(1.0 / n as f64).floor() as usize).max(2);
    let p_inv = group.inverse(p);
    let embed = |s: &[f64]| -> Vec<f64> { (0..q).map(|r| (0..n).map(|c| basis[(r, c)] * s[c]).sum()).collect() };
    let coords = |x: &[f64]| -> Vec<f64> { (0..n).map(|c| (0..q).map(|r| basis[(r, c)] * x[r]).sum()).collect() };

    let identity = |s: &[f64]| s.to_vec();
    let in_a = |s: &[f64]| region.contains(s);
    let forward = |s: &[f64]| -> Vec<f64> {
        let y = group.mul(p, &embed(s));
        let diff: Vec<f64> = y.iter().zip(p).map(|(a, b)| a - b).collect();
        coords(&diff)
    };
    let in_image = |t: &[f64]| -> bool {
        let mut x = embed(t);
        x.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        let mut out = vec![0.0; q];
        group.mul_into(&p_inv, &x, &mut out, &mut Scratch::default());
        region.contains(&coords(&out))
    };

    let mut coset_residual: f64 = 0.0;
    let mut rng = sampling::stream(seed, &[label("coset_residual")]);
    let (lo, hi) = region.bounds();
    for _ in 0..256 {
        let s: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect();
        let y = group.mul(p, &embed(&s));
        let diff: Vec<f64> = y.iter().zip(p).map(|(a, b)| a - b).collect();
        let back = embed(&coords(&diff));
        let off: Vec<f64> = diff.iter().zip(&back).map(|(a, b)| a - b).collect();
        coset_residual = coset_residual.max(norm2(&off));
    }

    let grid_seed = derive(seed, &[label("grid")]);
    let volume = measure_image(region, k, &identity, &in_a, grid_seed)?;
    let image_volume = if p.iter().all(|v| *v == 0.0) {
        volume.clone()
    } else {
        measure_image(region, k, &forward, &in_image, grid_seed)?
    };
    let z = volume.z_score(&image_volume);
    let scale = 1.0 + group.scale_of(p);
    Ok(TranslationReport {
        exact_volume: region.volume(),
        passed: z <= 3.0 && coset_residual <= 1e-9 * scale,
        volume,
        image_volume,
        z,
        coset_residual,
    })
}

// ------------------------------------------------------------- coarea

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoareaOptions {
    /// Quadrature of the volume integral and of each level-set integral.
    pub quadrature: Quadrature,
    /// Midpoint slices in t.
    pub slices: usize,
    pub tolerance: f64,
}

impl Default for CoareaOptions {
    fn default() -> Self {
        Self {
            quadrature: Quadrature::TensorGrid { resolution: 24 },
            slices: 32,
            tolerance: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoareaReport {
    /// 1-based index j of the coordinate solved for on level sets.
    pub graph_coordinate: usize,
    pub t_range: [f64; 2],
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub verdict: Verdict,
    pub passed: bool,
}

fn coordinate_names(q: usize) -> Vec<String> {
    (1..=q).map(|i| format!("x{i}")).collect()
}

/// Multi-index of `idx` on a grid with `per_axis` nodes, mapped into `domain`.
fn lattice_point(idx: usize, per_axis: usize, domain: &[[f64; 2]], offset: f64, out: &mut [f64]) {
    let mut rem = idx;
    let cells = if offset == 0.0 { (per_axis - 1).max(1) } else { per_axis };
    for (o, [lo, hi]) in out.iter_mut().zip(domain) {
        let i = rem % per_axis;
        rem /= per_axis;
        *o = lo + (hi - lo) * (i as f64 + offset) / cells as f64;
    }
}

/// ∫ u J_H f over the box, with J_H f the norm of the first-layer frame
/// components of ∇f.
fn coarea_lhs(
    group: &GradedGroup,
    f: &expr::Expr,
    u: &expr::Expr,
    domain: &[[f64; 2]],
    quadrature: Quadrature,
) -> Result<Estimate> {
    let q = group.dim();
    let layer = group.layer_range(1);
    let integrand = |x: &[f64], grad: &mut [f64], s: &mut EvalScratch| -> f64 {
        f.eval_grad(x, grad, s);
        let frame = group.left_invariant_frame(x);
        let j = layer
            .clone()
            .map(|i| (0..q).map(|r| frame[(r, i)] * grad[r]).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt();
        u.eval(x, s) * j
    };
    let volume: f64 = domain.iter().map(|[lo, hi]| hi - lo).product();
    match quadrature {
        Quadrature::TensorGrid { resolution } => {
            if resolution == 0 {
                return Err(Error::InvalidArgument("resolution must be positive".into()));
            }
            let midpoint = |cells: usize| -> f64 {
                let total = cells.pow(q as u32);
                map_chunks(total, |_, range| {
                    let mut x = vec![0.0; q];
                    let mut grad = vec![0.0; q];
                    let mut s = EvalScratch::default();
                    range
                        .map(|idx| {
                            lattice_point(idx, cells, domain, 0.5, &mut x);
                            integrand(&x, &mut grad, &mut s)
                        })
                        .sum::<f64>()
                })
                .into_iter()
                .sum::<f64>()
                    * volume
                    / total as f64
            };
            let coarse = midpoint(resolution);
            let fine = midpoint(2 * resolution);
            Ok(Estimate {
                value: (4.0 * fine - coarse) / 3.0,
                stderr: (fine - coarse).abs() / 3.0,
                samples: (resolution.pow(q as u32) * (1 + (1 << q))) as u64,
                seed: 0,
                method: "midpoint-richardson".into(),
            })
        }
        Quadrature::MonteCarlo { samples, seed } => {
            let task = label("coarea_lhs");
            let parts = map_chunks(samples, |c, range| {
                let mut rng = sampling::stream(seed, &[task, c as u64]);
                let mut x = vec![0.0; q];
                let mut grad = vec![0.0; q];
                let mut s = EvalScratch::default();
                let (mut sum, mut sq) = (0.0, 0.0);
                for _ in range {
                    for (xi, [lo, hi]) in x.iter_mut().zip(domain) {
                        *xi = lo + (hi - lo) * rng.random::<f64>();
                    }
                    let v = volume * integrand(&x, &mut grad, &mut s);
                    sum += v;
                    sq += v * v;
                }
                (sum, sq)
            });
            let (sum, sq) = parts.into_iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
            Ok(Estimate::from_sums(sum, sq, samples as u64, seed, "monte-carlo"))
        }
    }
}

/// Coordinate j with ∂f/∂x_j ≡ 1 on a probe lattice, so that level sets are
/// graphs x_j = t − (f − x_j).
fn graph_coordinate(f: &expr::Expr, domain: &[[f64; 2]]) -> Option<usize> {
    let q = domain.len();
    let per_axis: usize = 3;
    let total = per_axis.pow(q as u32);
    let mut x = vec![0.0; q];
    let mut grad = vec![0.0; q];
    let mut s = EvalScratch::default();
    let mut candidates: Vec<bool> = vec![true; q];
    for idx in 0..total {
        lattice_point(idx, per_axis, domain, 0.37, &mut x);
        f.eval_grad(&x, &mut grad, &mut s);
        for (c, g) in candidates.iter_mut().zip(&grad) {
            *c &= (g - 1.0).abs() <= 1e-12;
        }
    }
    candidates.iter().position(|c| *c)
}

/// Coarea balance for a scalar f: ∫ u J_H f dx against
/// ∫ dt ∫_{f = t} u dμ over the box, with each level set parametrized as a
/// graph and measured with the intrinsic density of degree Q − 1.
pub fn coarea_check(
    group: Arc<GradedGroup>,
    f_src: &str,
    d: &HomogeneousDistance,
    domain: &[[f64; 2]],
    u_src: &str,
    opts: &CoareaOptions,
    policy: &Policy,
) -> Result<CoareaReport> {
    let q = group.dim();
    if d.group().dim() != q {
        return Err(Error::BadDimensions("distance lives on a group of another dimension".into()));
    }
    if domain.len() != q || domain.iter().any(|[lo, hi]| !(lo < hi)) {
        return Err(Error::DomainViolation(format!("domain needs {q} nonempty intervals")));
    }
    if opts.slices == 0 {
        return Err(Error::InvalidArgument("slices must be positive".into()));
    }
    let names = coordinate_names(q);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let f = expr::parse(f_src, &refs)?;
    let u = expr::parse(u_src, &refs)?;
    let j = graph_coordinate(&f, domain)
        .ok_or_else(|| Error::LevelSetNotGraph(format!("no coordinate with unit partial derivative in '{f_src}'")))?;

    let lhs = coarea_lhs(&group, &f, &u, domain, opts.quadrature)?;

    // Range of f over the box, from a vertex lattice.
    let per_axis = ((50_000f64).powf(1.0 / q as f64).floor() as usize).max(2);
    let values = map_indexed(per_axis.pow(q as u32), |idx| {
        let mut x = vec![0.0; q];
        lattice_point(idx, per_axis, domain, 0.0, &mut x);
        f.eval(&x, &mut EvalScratch::default())
    });
    let t_lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let others: Vec<usize> = (0..q).filter(|&i| i != j).collect();
    let rest = expr::rename_identifiers(f_src, |name| {
        let i = names.iter().position(|n| n == name)?;
        Some(if i == j {
            "0".to_string()
        } else {
            format!("y{}", others.iter().position(|&o| o == i).unwrap() + 1)
        })
    })?;
    let level_domain: Vec<[f64; 2]> = others.iter().map(|&i| domain[i]).collect();
    let [jlo, jhi] = domain[j];
    let weight = |x: &[f64]| -> f64 {
        if x[j] < jlo || x[j] > jhi {
            0.0
        } else {
            u.eval(x, &mut EvalScratch::default())
        }
    };
    let degree = group.homogeneous_dim() - 1;
    let dt = (t_hi - t_lo) / opts.slices as f64;
    let (mut sum, mut var) = (0.0, 0.0);
    for i in 0..opts.slices {
        let t = t_lo + dt * (i as f64 + 0.5);
        let exprs: Vec<String> = (0..q)
            .map(|c| {
                if c == j {
                    format!("{t:.17} - ({rest})")
                } else {
                    format!("y{}", others.iter().position(|&o| o == c).unwrap() + 1)
                }
            })
            .collect();
        let level = ParamMap::parse(group.clone(), &exprs.join("; "), q - 1, &level_domain)?;
        let quad = match opts.quadrature {
            Quadrature::MonteCarlo { samples, seed } => Quadrature::MonteCarlo {
                samples,
                seed: derive(seed, &[label("coarea_slice"), i as u64]),
            },
            other => other,
        };
        let inner = intrinsic_measure(&level, &level_domain, quad, Some(degree), Some(&weight), policy)?;
        sum += inner.value * dt;
        var += (inner.stderr * dt).powi(2);
    }
    let rhs = Estimate {
        value: sum,
        stderr: var.sqrt(),
        samples: opts.slices as u64,
        seed: match opts.quadrature {
            Quadrature::MonteCarlo { seed, .. } => seed,
            Quadrature::TensorGrid { .. } => 0,
        },
        method: "level-set-slices".into(),
    };
    let mut verdict = Verdict::relative("coarea_balance", lhs.value, rhs.value, opts.tolerance);
    if !d.vertically_symmetric(q - 1) {
        verdict = verdict.advisory("distance not declared vertically symmetric in codimension one");
    }
    Ok(CoareaReport {
        graph_coordinate: j + 1,
        t_range: [t_lo, t_hi],
        passed: verdict.passed || verdict.advisory,
        lhs,
        rhs,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::catalog;
    use crate::metrics::DistanceKind;

    fn h1() -> Arc<GradedGroup> {
        Arc::new(catalog::heisenberg(1).unwrap())
    }

    fn box_d(g: &Arc<GradedGroup>, eps: Vec<f64>) -> HomogeneousDistance {
        HomogeneousDistance::new(g.clone(), DistanceKind::Box { eps }).unwrap()
    }

    #[test]
    fn cube_sections_are_constant() {
        let g = abelian3();
        let s = Subspace::coordinate(&g, &[0, 1]).unwrap();
        let r = section_concavity_check(&ConvexBody::Cube { half: 1.0 }, &s, 50, 2000, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.worst_z, 0.0);
    }

    fn abelian3() -> GradedGroup {
        catalog::abelian(3).unwrap()
    }

    #[test]
    fn euclidean_ball_sections() {
        let g = abelian3();
        let s = Subspace::coordinate(&g, &[0, 2]).unwrap();
        let body = ConvexBody::Ellipsoid { semi_axes: vec![1.0; 3] };
        let r = section_concavity_check(&body, &s, 100, 4000, 2).unwrap();
        assert!(r.passed, "{r:?}");
        // A non-convex metric ball is refused.
        let g = h1();
        let spec = crate::metrics::DistanceSpec {
            kind: "multiradial".into(),
            params: vec![],
            phi_expr: Some("max(a1, a2^0.5)".into()),
        };
        let d = HomogeneousDistance::from_spec(g.clone(), &spec).unwrap();
        assert_ne!(d.convexity(), Convexity::Convex);
        let s = Subspace::coordinate(&g, &[0, 2]).unwrap();
        assert!(matches!(
            section_concavity_check(&ConvexBody::MetricBall(&d), &s, 1, 10, 0),
            Err(Error::NotConvex)
        ));
    }

    #[test]
    fn translation_identity_and_guard() {
        let g = h1();
        let n = Subspace::coordinate(&g, &[0, 2]).unwrap();
        let a = TranslationRegion::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        let r = vertical_translation_check(&g, &n, &[0.0; 3], &a, 4096, 3).unwrap();
        assert_eq!(r.volume, r.image_volume);
        assert!(r.passed);
        let r = vertical_translation_check(&g, &n, &[0.3, -0.7, 0.2], &a, 10_000, 3).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.image_volume.value - 1.0).abs() < 4.0 * r.image_volume.stderr.max(1e-3), "{r:?}");
        let h = Subspace::coordinate(&g, &[0, 1]).unwrap();
        assert!(matches!(
            vertical_translation_check(&g, &h, &[0.0; 3], &a, 100, 3),
            Err(Error::NotVertical)
        ));
    }

    #[test]
    fn coarea_vertical_planes() {
        let g = h1();
        let d = box_d(&g, vec![1.0, 1.0]);
        let dom = [[0.0, 1.0]; 3];
        let opts = CoareaOptions {
            quadrature: Quadrature::TensorGrid { resolution: 8 },
            slices: 8,
            ..CoareaOptions::default()
        };
        let r = coarea_check(g.clone(), "x1", &d, &dom, "1", &opts, &Policy::default()).unwrap();
        assert_eq!(r.graph_coordinate, 1);
        assert!((r.lhs.value - 1.0).abs() < 1e-9 && (r.rhs.value - 1.0).abs() < 1e-9, "{r:?}");
        let r = coarea_check(g.clone(), "x1", &d, &dom, "x2^2", &opts, &Policy::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!((r.lhs.value - 1.0 / 3.0).abs() < 1e-6);
        assert!(matches!(
            coarea_check(g, "x1^2", &d, &dom, "1", &opts, &Policy::default()),
            Err(Error::LevelSetNotGraph(_))
        ));
    }

    #[test]
    fn coarea_horizontal_levels() {
        let g = h1();
        let d = box_d(&g, vec![1.0, 1.0]);
        let dom = [[-1.0, 1.0], [-1.0, 1.0], [-0.5, 0.5]];
        let opts = CoareaOptions {
            quadrature: Quadrature::TensorGrid { resolution: 12 },
            slices: 16,
            ..CoareaOptions::default()
        };
        let r = coarea_check(g, "x3", &d, &dom, "1", &opts, &Policy::default()).unwrap();
        assert_eq!(r.graph_coordinate, 3);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn area_plane_and_paraboloid() {
        let g = h1();
        let d = box_d(&g, vec![1.0, 1.0]);
        let plane = ParamMap::parse(g.clone(), "y1; 0; y2", 2, &[[-1.0, 1.0]; 2]).unwrap();
        let opts = AreaOptions {
            quadrature: Quadrature::TensorGrid { resolution: 4 },
            beta: BetaOptions { samples: 100_000, ..BetaOptions::default() },
            federer: FedererOptions {
                radii: (0..5).map(|k| 0.1 * 10f64.powf(-0.5 * k as f64)).collect(),
                samples: 100_000,
                ..FedererOptions::default()
            },
            seed: 9,
            ..AreaOptions::default()
        };
        let r = area_check(&plane, &d, &[[-1.0, 1.0]; 2], &[vec![0.1, 0.2]], &opts, &Policy::default()).unwrap();
        assert_eq!(r.degree, 3);
        assert!((r.measure.value - 4.0).abs() < 1e-9);
        assert!(r.passed, "{:?}", r.verdicts);

        let para = ParamMap::parse(g, "y1; y2; y1^2 + y2^2", 2, &[[-1.0, 1.0]; 2]).unwrap();
        let r = area_check(&para, &d, &[[-1.0, 1.0]; 2], &[vec![0.0, 0.0]], &opts, &Policy::default()).unwrap();
        assert!(r.passed);
        assert!(r.verdicts[0].advisory);
        assert!(r.probes[0].note.as_deref().unwrap().contains("irregular"));
    }
}
