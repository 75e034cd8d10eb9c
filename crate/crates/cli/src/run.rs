//! Task execution and report assembly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hgroup::algebra::catalog;
use hgroup::manifold::{ParamMap, SubmanifoldSpec};
use hgroup::measure::{
    area_check, beta_constancy_check, coarea_check, federer_density, section_concavity_check, spherical_factor,
    vertical_translation_check, ConvexBody, RadiusRow, TranslationRegion, Verdict,
};
use hgroup::metrics::{Convexity, HomogeneousDistance};
use hgroup::sampling::{self, derive, label};
use hgroup::{GradedGroup, Subspace};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{BodySpec, GroupSpec, RunConfig, SubspaceSpec, TaskSpec};
use crate::suite::{self, GroupSummary};
use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    /// Error variant name, e.g. "GradingViolation".
    pub kind: String,
    pub message: String,
}

impl From<&hgroup::Error> for ErrorRecord {
    fn from(e: &hgroup::Error) -> Self {
        let debug = format!("{e:?}");
        let kind = debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string();
        Self { kind, message: e.to_string() }
    }
}

fn setup_error(message: impl Into<String>) -> ErrorRecord {
    ErrorRecord {
        kind: "ConfigError".into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    Failed,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub index: usize,
    pub task: String,
    pub seed: u64,
    pub status: Status,
    pub verdicts: Vec<Verdict>,
    pub result: Value,
    /// CSV files written next to the report.
    pub traces: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// Seconds since the Unix epoch; SOURCE_DATE_EPOCH when set.
    pub timestamp: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    /// The effective configuration, after command-line overrides.
    pub config: RunConfig,
    pub group: Option<GroupSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_error: Option<ErrorRecord>,
    pub tasks: Vec<TaskRecord>,
    pub passed: bool,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; the config's `output`, else `hgroup-out`.
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// Restrict the run to tasks of this kind, adding a default one if none is listed.
    pub only: Option<String>,
}

pub struct RunOutcome {
    pub report: Report,
    pub summary: String,
    pub out_dir: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed {
            0
        } else {
            1
        }
    }
}

struct TaskOutput {
    result: Value,
    verdicts: Vec<Verdict>,
    /// (file suffix, CSV text).
    traces: Vec<(String, String)>,
}

impl TaskOutput {
    fn new(result: impl Serialize) -> Result<Self, ErrorRecord> {
        Ok(Self {
            result: to_value(result)?,
            verdicts: Vec::new(),
            traces: Vec::new(),
        })
    }
}

fn to_value(v: impl Serialize) -> Result<Value, ErrorRecord> {
    serde_json::to_value(v).map_err(|e| ErrorRecord {
        kind: "NonFinite".into(),
        message: e.to_string(),
    })
}

type TaskResult = Result<TaskOutput, ErrorRecord>;

fn core<T>(r: hgroup::Result<T>) -> Result<T, ErrorRecord> {
    r.map_err(|e| ErrorRecord::from(&e))
}

struct Context<'a> {
    group: Arc<GradedGroup>,
    config: &'a RunConfig,
    seed: u64,
}

impl Context<'_> {
    fn distance(&self) -> Result<HomogeneousDistance, ErrorRecord> {
        let spec = self.config.distance.as_ref().ok_or_else(|| setup_error("task needs a distance"))?;
        core(HomogeneousDistance::from_spec(self.group.clone(), spec))
    }

    fn map(&self, local: &Option<SubmanifoldSpec>) -> Result<ParamMap, ErrorRecord> {
        let spec = local
            .as_ref()
            .or(self.config.submanifold.as_ref())
            .ok_or_else(|| setup_error("task needs a submanifold"))?;
        core(ParamMap::from_spec(self.group.clone(), spec))
    }

    fn subspace(&self, spec: &SubspaceSpec, key: u64) -> Result<Subspace, ErrorRecord> {
        let g = &*self.group;
        let q = g.dim();
        match spec {
            SubspaceSpec::Coordinates(idx) => {
                if idx.iter().any(|&i| i == 0 || i > q) {
                    return Err(setup_error(format!("coordinate indices must lie in 1..={q}")));
                }
                let zero_based: Vec<usize> = idx.iter().map(|i| i - 1).collect();
                core(Subspace::coordinate(g, &zero_based))
            }
            SubspaceSpec::Basis(vectors) => {
                if vectors.is_empty() || vectors.iter().any(|v| v.len() != q) {
                    return Err(setup_error(format!("basis vectors must have {q} entries")));
                }
                let cols: Vec<DVector<f64>> = vectors.iter().map(|v| DVector::from_column_slice(v)).collect();
                core(Subspace::new(g, DMatrix::from_columns(&cols)))
            }
            SubspaceSpec::RandomVertical { dim } => {
                let mut rng = sampling::stream(self.seed, &[label("random_vertical"), key]);
                random_vertical(g, *dim, &mut rng)
            }
        }
    }
}

/// Random vertical subgroup: an isotropic r-plane of layer ℓ plus every
/// higher layer, with (ℓ, r) the vertical split of `dim`.
pub fn random_vertical<R: Rng>(g: &GradedGroup, dim: usize, rng: &mut R) -> Result<Subspace, ErrorRecord> {
    let q = g.dim();
    if dim == 0 || dim > q {
        return Err(setup_error(format!("vertical subgroup dimension must lie in 1..={q}")));
    }
    let (l, r) = g.vertical_split(dim);
    let layer = g.layer_range(l);
    let mut cols = Vec::with_capacity(dim);
    let mut block = vec![0.0; layer.len()];
    for _ in 0..r {
        sampling::unit_sphere_point(rng, &mut block);
        let mut v = DVector::zeros(q);
        for (i, b) in layer.clone().zip(&block) {
            v[i] = *b;
        }
        cols.push(v);
    }
    for i in layer.end..q {
        let mut v = DVector::zeros(q);
        v[i] = 1.0;
        cols.push(v);
    }
    core(Subspace::new(g, DMatrix::from_columns(&cols)))
}

fn midpoint(domain: &[[f64; 2]]) -> Vec<f64> {
    domain.iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect()
}

fn radius_csv(rows: &[RadiusRow]) -> String {
    let mut out = String::from("radius,ratio,stderr,hits\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.radius, r.ratio, r.stderr, r.hits);
    }
    out
}

fn flag(name: &str, passed: bool, advisory: bool, note: Option<String>) -> Verdict {
    Verdict {
        name: name.into(),
        passed,
        advisory,
        tolerance: 0.0,
        tolerance_kind: "flag".into(),
        lhs: if passed { 1.0 } else { 0.0 },
        rhs: 1.0,
        note,
    }
}

fn execute(task: &TaskSpec, ctx: &Context) -> TaskResult {
    let g = &ctx.group;
    let policy = &ctx.config.policy;
    let seed = ctx.seed;
    match task {
        TaskSpec::ValidateGroup {} => {
            let summary = GroupSummary::of(g);
            TaskOutput::new(json!({
                "name": summary.name,
                "dim": summary.dim,
                "step": summary.step,
                "layers": summary.layers,
                "homogeneous_dim": summary.homogeneous_dim,
                "q_n": summary.q_n,
                "brackets": g.structure_constants(),
            }))
        }
        TaskSpec::Catalog {} => TaskOutput::new(suite::catalog()),
        TaskSpec::AnalyzePoint { y, submanifold } => {
            let map = ctx.map(submanifold)?;
            let y = y.clone().unwrap_or_else(|| midpoint(map.domain()));
            let reference = core(map.sampled_max_degree(policy))?;
            let analysis = core(map.classify_point(&y, policy, Some(reference)))?;
            TaskOutput::new(json!({ "submanifold_degree": reference, "analysis": analysis }))
        }
        TaskSpec::DegreeMap { grid, submanifold } => {
            let map = ctx.map(submanifold)?;
            let counts = grid.clone().unwrap_or_else(|| vec![9; map.n()]);
            let dm = core(map.degree_map(&counts, policy))?;
            let mut out = TaskOutput::new(json!({ "counts": dm.counts, "summary": dm.summary }))?;
            out.traces.push((String::new(), dm.to_csv()));
            Ok(out)
        }
        TaskSpec::BlowupCheck { y, ray, submanifold } => {
            let map = ctx.map(submanifold)?;
            let y = y.clone().unwrap_or_else(|| midpoint(map.domain()));
            let reference = core(map.sampled_max_degree(policy))?;
            let report = core(map.blowup_rates(&y, ray.as_deref(), policy, Some(reference)))?;
            let mut csv = String::from("scale");
            for c in &report.coordinates {
                let _ = write!(csv, ",ratio_{}", c.index);
            }
            csv.push('\n');
            for (k, t) in report.scales.iter().enumerate() {
                let _ = write!(csv, "{t}");
                for c in &report.coordinates {
                    let _ = write!(csv, ",{}", c.ratios.get(k).copied().unwrap_or(f64::NAN));
                }
                csv.push('\n');
            }
            let mut out = TaskOutput::new(&report)?;
            out.verdicts.push(flag("blowup_rates", report.passed, report.advisory, report.note.clone()));
            out.traces.push((String::new(), csv));
            Ok(out)
        }
        TaskSpec::SphericalFactor { subspace, options } => {
            let d = ctx.distance()?;
            let spec = subspace.as_ref().ok_or_else(|| setup_error("spherical-factor needs a subspace"))?;
            let s = ctx.subspace(spec, 0)?;
            let opts = hgroup::measure::BetaOptions { seed, ..options.clone() };
            let beta = core(spherical_factor(&d, &s, &opts))?;
            let mut out = TaskOutput::new(&beta)?;
            if beta.shortcut.is_none() && d.convexity() == Convexity::Convex && s.classify(g, 1e-9).vertical {
                out.verdicts.push(Verdict::sigma("search_vs_origin", &beta.estimate, &beta.origin, 3.0));
            }
            Ok(out)
        }
        TaskSpec::FedererDensity { y, options, submanifold } => {
            let map = ctx.map(submanifold)?;
            let d = ctx.distance()?;
            let y = y.clone().unwrap_or_else(|| midpoint(map.domain()));
            let opts = hgroup::measure::FedererOptions { seed, ..options.clone() };
            let report = core(federer_density(&map, &d, &y, &opts, policy))?;
            let mut out = TaskOutput::new(&report)?;
            out.verdicts.push(flag(
                "trace_flat",
                report.flat_last_two_decades,
                true,
                Some("flatness of the last two decades of radii".into()),
            ));
            out.traces.push((String::new(), radius_csv(&report.trace)));
            Ok(out)
        }
        TaskSpec::AreaCheck { region, probes, options, submanifold } => {
            let map = ctx.map(submanifold)?;
            let d = ctx.distance()?;
            let region = region.clone().unwrap_or_else(|| map.domain().to_vec());
            let probes = if probes.is_empty() { vec![midpoint(&region)] } else { probes.clone() };
            let opts = hgroup::measure::AreaOptions { seed, ..options.clone() };
            let report = core(area_check(&map, &d, &region, &probes, &opts, policy))?;
            let mut out = TaskOutput::new(&report)?;
            out.verdicts = report.verdicts.clone();
            for (i, p) in report.probes.iter().enumerate() {
                if let Some(f) = &p.federer {
                    out.traces.push((format!("-probe{i}"), radius_csv(&f.trace)));
                }
            }
            if let Some(c) = &report.covering {
                let csv = format!(
                    "delta,covering_value,stderr,centers,spacing\n{},{},{},{},{}\n",
                    c.delta, c.estimate.value, c.estimate.stderr, c.centers, c.spacing
                );
                out.traces.push(("-covering".into(), csv));
            }
            Ok(out)
        }
        TaskSpec::CoareaCheck { f, u, domain, options } => {
            let d = ctx.distance()?;
            let report = core(coarea_check(g.clone(), f, &d, domain, u, options, policy))?;
            let mut out = TaskOutput::new(&report)?;
            out.verdicts.push(report.verdict.clone());
            Ok(out)
        }
        TaskSpec::ConcavityCheck { body, subspace, segments, samples } => {
            let spec = subspace.as_ref().ok_or_else(|| setup_error("concavity-check needs a subspace"))?;
            let s = ctx.subspace(spec, 0)?;
            let d;
            let body = match body {
                BodySpec::Cube { half } => ConvexBody::Cube { half: *half },
                BodySpec::Ellipsoid { semi_axes } => ConvexBody::Ellipsoid { semi_axes: semi_axes.clone() },
                BodySpec::MetricBall => {
                    d = ctx.distance()?;
                    ConvexBody::MetricBall(&d)
                }
            };
            let report = core(section_concavity_check(&body, &s, *segments, *samples, seed))?;
            let mut out = TaskOutput::new(&report)?;
            let mut v = flag("violations", report.passed, false, None);
            v.tolerance_kind = "absolute".into();
            v.lhs = report.violations as f64;
            v.rhs = 0.0;
            out.verdicts.push(v);
            Ok(out)
        }
        TaskSpec::TranslationCheck { subspace, pairs, p, region, samples } => {
            let s = ctx.subspace(subspace, 0)?;
            let n = s.dim();
            let q = g.dim();
            let default_region = || TranslationRegion::Box {
                lo: vec![-0.5; n],
                hi: vec![0.5; n],
            };
            let cases: Vec<(Vec<f64>, TranslationRegion)> = match p {
                Some(p) => vec![(p.clone(), region.clone().unwrap_or_else(default_region))],
                None => {
                    let mut rng = sampling::stream(seed, &[label("pairs")]);
                    (0..*pairs)
                        .map(|_| {
                            let p: Vec<f64> = (0..q).map(|_| rng.random_range(-1.0..1.0)).collect();
                            let lo: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..0.0)).collect();
                            let hi = lo.iter().map(|a| a + rng.random_range(0.2..1.2)).collect();
                            (p, region.clone().unwrap_or(TranslationRegion::Box { lo, hi }))
                        })
                        .collect()
                }
            };
            let mut reports = Vec::with_capacity(cases.len());
            let mut verdicts = Vec::with_capacity(cases.len());
            let mut csv = String::from("pair,volume,volume_stderr,image_volume,image_stderr,z,coset_residual\n");
            for (i, (p, a)) in cases.iter().enumerate() {
                let r = core(vertical_translation_check(g, &s, p, a, *samples, derive(seed, &[i as u64])))?;
                let mut v = Verdict::sigma(&format!("translation[{i}]"), &r.volume, &r.image_volume, 3.0);
                v.passed = r.passed;
                verdicts.push(v);
                let _ = writeln!(
                    csv,
                    "{i},{},{},{},{},{},{}",
                    r.volume.value, r.volume.stderr, r.image_volume.value, r.image_volume.stderr, r.z, r.coset_residual
                );
                reports.push(json!({ "p": p, "region": a, "report": r }));
            }
            let mut out = TaskOutput::new(reports)?;
            out.verdicts = verdicts;
            out.traces.push((String::new(), csv));
            Ok(out)
        }
        TaskSpec::BetaConstancy { subspaces, random_vertical: random, options } => {
            let d = ctx.distance()?;
            let mut family = Vec::new();
            for (i, spec) in subspaces.iter().enumerate() {
                family.push(ctx.subspace(spec, i as u64)?);
            }
            if let Some(r) = random {
                let mut rng = sampling::stream(seed, &[label("family")]);
                for _ in 0..r.count {
                    family.push(random_vertical(g, r.dim, &mut rng)?);
                }
            }
            let opts = hgroup::measure::BetaOptions { seed, ..options.clone() };
            let report = core(beta_constancy_check(&d, &family, &opts))?;
            let mut csv = String::from("member,value,stderr\n");
            for (i, e) in report.estimates.iter().enumerate() {
                let _ = writeln!(csv, "{i},{},{}", e.value, e.stderr);
            }
            let mut out = TaskOutput::new(&report)?;
            out.verdicts.push(Verdict {
                name: "max_pairwise_z".into(),
                passed: report.passed,
                advisory: false,
                tolerance: 3.0,
                tolerance_kind: "sigma".into(),
                lhs: report.max_pairwise_z,
                rhs: 0.0,
                note: None,
            });
            out.traces.push((String::new(), csv));
            Ok(out)
        }
        TaskSpec::PropSuite { samples } => {
            let (residuals, mut verdicts) = suite::group_law_verdicts(g, *samples, seed);
            let mut result = json!({ "samples": samples, "residuals": residuals });
            if ctx.config.distance.is_some() {
                let d = ctx.distance()?;
                let axioms = d.verify_distance_axioms(*samples, derive(seed, &[label("axioms")]));
                let mut v = flag("distance_axioms", axioms.passed, false, None);
                if d.convexity() == Convexity::Unknown {
                    v = v.advisory("triangle inequality is not guaranteed for this profile");
                }
                verdicts.push(v);
                result["axioms"] = to_value(&axioms)?;
            }
            let mut out = TaskOutput::new(result)?;
            out.verdicts = verdicts;
            Ok(out)
        }
    }
}

fn resolve_group(spec: &GroupSpec) -> hgroup::Result<GradedGroup> {
    match spec {
        GroupSpec::Catalog(name) => catalog::by_name(name),
        GroupSpec::Definition(def) => GradedGroup::load(def),
    }
}

fn timestamp() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
        return epoch;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Applies command-line overrides to a configuration.
pub fn effective_config(config: &RunConfig, opts: &RunOptions) -> Result<RunConfig, CliError> {
    let mut cfg = config.clone();
    cfg.output = None;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if opts.samples.is_some() {
        cfg.samples = opts.samples;
    }
    if let Some(kind) = &opts.only {
        cfg.tasks.retain(|t| t.name() == kind);
        if cfg.tasks.is_empty() {
            let t = TaskSpec::default_for(kind).ok_or_else(|| {
                CliError::Config(format!("no '{kind}' task in the configuration and the task has required fields"))
            })?;
            cfg.tasks.push(t);
        }
    }
    if let Some(n) = cfg.samples {
        for t in &mut cfg.tasks {
            t.override_samples(n);
        }
    }
    Ok(cfg)
}

/// Runs every task without touching the filesystem. Returns the report
/// and the CSV traces keyed by file name.
pub fn evaluate(cfg: &RunConfig) -> (Report, Vec<(String, String)>) {
    let (group, group_error) = match cfg.group.as_ref().map(resolve_group) {
        Some(Ok(g)) => (Some(Arc::new(g)), None),
        Some(Err(e)) => (None, Some(ErrorRecord::from(&e))),
        None => (None, None),
    };
    let mut tasks = Vec::with_capacity(cfg.tasks.len());
    let mut files = Vec::new();
    for (index, task) in cfg.tasks.iter().enumerate() {
        let seed = derive(cfg.seed, &[label("task"), index as u64]);
        let outcome = match (&group, task) {
            (_, TaskSpec::Catalog {}) => TaskOutput::new(suite::catalog()),
            (Some(g), _) => execute(task, &Context { group: g.clone(), config: cfg, seed }),
            (None, _) => Err(group_error.clone().unwrap_or_else(|| setup_error("task needs a group"))),
        };
        let record = match outcome {
            Ok(out) => {
                let failed = out.verdicts.iter().any(|v| !v.passed && !v.advisory);
                let mut traces = Vec::new();
                for (suffix, csv) in out.traces {
                    let name = format!("task{index:02}-{}{suffix}.csv", task.name());
                    files.push((name.clone(), csv));
                    traces.push(name);
                }
                TaskRecord {
                    index,
                    task: task.name().into(),
                    seed,
                    status: if failed { Status::Failed } else { Status::Passed },
                    verdicts: out.verdicts,
                    result: out.result,
                    traces,
                    error: None,
                }
            }
            Err(e) => TaskRecord {
                index,
                task: task.name().into(),
                seed,
                status: Status::Error,
                verdicts: vec![],
                result: Value::Null,
                traces: vec![],
                error: Some(e),
            },
        };
        tasks.push(record);
    }
    let passed = group_error.is_none() && tasks.iter().all(|t| t.status == Status::Passed);
    let report = Report {
        schema: SCHEMA,
        config: cfg.clone(),
        group: group.as_deref().map(GroupSummary::of),
        group_error,
        tasks,
        passed,
        metadata: Metadata {
            timestamp: timestamp(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
    };
    (report, files)
}

pub fn summarize(report: &Report) -> String {
    let mut out = String::new();
    if let Some(g) = &report.group {
        let _ = writeln!(out, "group {} (q = {}, step {}, Q = {})", g.name, g.dim, g.step, g.homogeneous_dim);
    }
    if let Some(e) = &report.group_error {
        let _ = writeln!(out, "group error: {}: {}", e.kind, e.message);
    }
    for t in &report.tasks {
        let status = match t.status {
            Status::Passed => "passed",
            Status::Failed => "FAILED",
            Status::Error => "ERROR",
        };
        let advisory = t.verdicts.iter().filter(|v| v.advisory).count();
        let _ = writeln!(
            out,
            "[{:>2}] {:<18} {:<7} {} verdicts, {} advisory",
            t.index,
            t.task,
            status,
            t.verdicts.len(),
            advisory
        );
        for v in &t.verdicts {
            if !v.passed || v.advisory {
                let tag = if v.advisory { "advisory" } else { "fail" };
                let _ = write!(out, "       {tag} {}: lhs {:.6} rhs {:.6} ({} {})", v.name, v.lhs, v.rhs, v.tolerance_kind, v.tolerance);
                if let Some(note) = &v.note {
                    let _ = write!(out, " - {note}");
                }
                out.push('\n');
            }
        }
        if let Some(e) = &t.error {
            let _ = writeln!(out, "       {}: {}", e.kind, e.message);
        }
    }
    let _ = writeln!(out, "{}", if report.passed { "all tasks passed" } else { "run failed" });
    out
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Serialized report: pretty JSON with a trailing newline.
pub fn report_json(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report fields are serializable");
    text.push('\n');
    text
}

/// Runs a configuration and writes report.json, summary.txt and the CSV
/// traces into the output directory.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let out_dir = opts
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("hgroup-out"));
    let cfg = effective_config(config, opts)?;
    let (report, files) = evaluate(&cfg);
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(out_dir.clone(), e))?;
    write(&out_dir.join("report.json"), &report_json(&report))?;
    for (name, csv) in &files {
        write(&out_dir.join(name), csv)?;
    }
    let summary = summarize(&report);
    write(&out_dir.join("summary.txt"), &summary)?;
    Ok(RunOutcome { report, summary, out_dir })
}
