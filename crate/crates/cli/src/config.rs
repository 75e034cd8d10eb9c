//! The run configuration document.

use std::path::{Path, PathBuf};

use hgroup::manifold::SubmanifoldSpec;
use hgroup::measure::{AreaOptions, BetaOptions, CoareaOptions, FedererOptions, TranslationRegion};
use hgroup::metrics::DistanceSpec;
use hgroup::{GroupDefinition, Policy};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

/// A catalog name such as `"heisenberg(1)"` or an inline definition.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupSpec {
    Catalog(String),
    Definition(GroupDefinition),
}

impl Serialize for GroupSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Catalog(name) => s.serialize_str(name),
            Self::Definition(def) => def.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(name) => Ok(Self::Catalog(name)),
            v @ serde_json::Value::Object(_) => {
                GroupDefinition::deserialize(v).map(Self::Definition).map_err(D::Error::custom)
            }
            _ => Err(D::Error::custom("group must be a catalog name or a definition object")),
        }
    }
}

/// A linear subspace of the Lie algebra in graded coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SubspaceSpec {
    /// Span of the listed coordinate axes (1-based).
    Coordinates(Vec<usize>),
    /// Span of the listed vectors.
    Basis(Vec<Vec<f64>>),
    /// A random vertical subgroup of the given dimension, drawn from the task seed.
    RandomVertical { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Cube {
        #[serde(default = "one")]
        half: f64,
    },
    Ellipsoid { semi_axes: Vec<f64> },
    /// Unit ball of the configured distance.
    MetricBall,
}

fn one() -> f64 {
    1.0
}

fn default_u() -> String {
    "1".into()
}

fn default_segments() -> usize {
    1000
}

fn default_section_samples() -> usize {
    20_000
}

fn default_pairs() -> usize {
    100
}

fn default_translation_samples() -> usize {
    40_000
}

fn default_suite_samples() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFamily {
    pub dim: usize,
    pub count: usize,
}

/// One task of a run. Seeds inside option blocks are replaced by seeds
/// derived from the run seed and the task index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskSpec {
    ValidateGroup {},
    Catalog {},
    AnalyzePoint {
        /// Parameter point; the domain midpoint if absent.
        #[serde(default)]
        y: Option<Vec<f64>>,
        #[serde(default)]
        submanifold: Option<SubmanifoldSpec>,
    },
    DegreeMap {
        /// Nodes per parameter axis; 9 each if absent.
        #[serde(default)]
        grid: Option<Vec<usize>>,
        #[serde(default)]
        submanifold: Option<SubmanifoldSpec>,
    },
    BlowupCheck {
        #[serde(default)]
        y: Option<Vec<f64>>,
        #[serde(default)]
        ray: Option<Vec<f64>>,
        #[serde(default)]
        submanifold: Option<SubmanifoldSpec>,
    },
    SphericalFactor {
        #[serde(default)]
        subspace: Option<SubspaceSpec>,
        #[serde(default)]
        options: BetaOptions,
    },
    FedererDensity {
        #[serde(default)]
        y: Option<Vec<f64>>,
        #[serde(default)]
        options: FedererOptions,
        #[serde(default)]
        submanifold: Option<SubmanifoldSpec>,
    },
    AreaCheck {
        /// Integration region; the whole domain if absent.
        #[serde(default)]
        region: Option<Vec<[f64; 2]>>,
        /// Probe points; the region midpoint if empty.
        #[serde(default)]
        probes: Vec<Vec<f64>>,
        #[serde(default)]
        options: AreaOptions,
        #[serde(default)]
        submanifold: Option<SubmanifoldSpec>,
    },
    CoareaCheck {
        /// Function of x1..xq of the form x_j − g(other coordinates).
        f: String,
        #[serde(default = "default_u")]
        u: String,
        domain: Vec<[f64; 2]>,
        #[serde(default)]
        options: CoareaOptions,
    },
    ConcavityCheck {
        body: BodySpec,
        #[serde(default)]
        subspace: Option<SubspaceSpec>,
        #[serde(default = "default_segments")]
        segments: usize,
        #[serde(default = "default_section_samples")]
        samples: usize,
    },
    TranslationCheck {
        subspace: SubspaceSpec,
        /// Random translations p and boxes A; ignored when `p` is given.
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default)]
        p: Option<Vec<f64>>,
        #[serde(default)]
        region: Option<TranslationRegion>,
        #[serde(default = "default_translation_samples")]
        samples: usize,
    },
    BetaConstancy {
        #[serde(default)]
        subspaces: Vec<SubspaceSpec>,
        #[serde(default)]
        random_vertical: Option<RandomFamily>,
        #[serde(default)]
        options: BetaOptions,
    },
    PropSuite {
        #[serde(default = "default_suite_samples")]
        samples: usize,
    },
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ValidateGroup {} => "validate-group",
            Self::Catalog {} => "catalog",
            Self::AnalyzePoint { .. } => "analyze-point",
            Self::DegreeMap { .. } => "degree-map",
            Self::BlowupCheck { .. } => "blowup-check",
            Self::SphericalFactor { .. } => "spherical-factor",
            Self::FedererDensity { .. } => "federer-density",
            Self::AreaCheck { .. } => "area-check",
            Self::CoareaCheck { .. } => "coarea-check",
            Self::ConcavityCheck { .. } => "concavity-check",
            Self::TranslationCheck { .. } => "translation-check",
            Self::BetaConstancy { .. } => "beta-constancy",
            Self::PropSuite { .. } => "prop-suite",
        }
    }

    /// Default instance of a task kind, or None when the kind has required fields.
    pub fn default_for(name: &str) -> Option<Self> {
        Some(match name {
            "validate-group" => Self::ValidateGroup {},
            "catalog" => Self::Catalog {},
            "analyze-point" => Self::AnalyzePoint { y: None, submanifold: None },
            "degree-map" => Self::DegreeMap { grid: None, submanifold: None },
            "blowup-check" => Self::BlowupCheck { y: None, ray: None, submanifold: None },
            "spherical-factor" => Self::SphericalFactor { subspace: None, options: BetaOptions::default() },
            "federer-density" => Self::FedererDensity {
                y: None,
                options: FedererOptions::default(),
                submanifold: None,
            },
            "area-check" => Self::AreaCheck {
                region: None,
                probes: vec![],
                options: AreaOptions::default(),
                submanifold: None,
            },
            "prop-suite" => Self::PropSuite { samples: default_suite_samples() },
            _ => return None,
        })
    }

    /// Replaces every Monte Carlo sample count of the task.
    pub fn override_samples(&mut self, n: usize) {
        match self {
            Self::SphericalFactor { options, .. } | Self::BetaConstancy { options, .. } => options.samples = n,
            Self::FedererDensity { options, .. } => options.samples = n,
            Self::AreaCheck { options, .. } => {
                options.beta.samples = n;
                options.federer.samples = n;
            }
            Self::ConcavityCheck { samples, .. }
            | Self::TranslationCheck { samples, .. }
            | Self::PropSuite { samples } => *samples = n,
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub distance: Option<DistanceSpec>,
    #[serde(default)]
    pub submanifold: Option<SubmanifoldSpec>,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Sample count applied to every task that draws samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub policy: Policy,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"group": "engel", "sed": 3}"#).is_err());
        let bad_task = r#"{"group": "engel", "tasks": [{"task": "prop-suite", "sample": 3}]}"#;
        assert!(RunConfig::from_json(bad_task).is_err());
        let bad_group = r#"{"group": {"name": "g", "layers": [2, 1], "brackets": [], "extra": 1}}"#;
        assert!(RunConfig::from_json(bad_group).is_err());
    }

    #[test]
    fn tasks_and_groups_parse() {
        let cfg = RunConfig::from_json(
            r#"{
                "group": {"name": "h", "layers": [2, 1], "brackets": [[1, 2, 3, 2.0]]},
                "tasks": [
                    {"task": "validate-group"},
                    {"task": "spherical-factor", "subspace": {"coordinates": [1, 3]}},
                    {"task": "concavity-check", "body": {"kind": "cube"}},
                    {"task": "beta-constancy", "random_vertical": {"dim": 2, "count": 8}}
                ]
            }"#,
        )
        .unwrap();
        assert!(matches!(cfg.group, Some(GroupSpec::Definition(_))));
        assert_eq!(cfg.tasks.len(), 4);
        assert_eq!(cfg.tasks[2], TaskSpec::ConcavityCheck {
            body: BodySpec::Cube { half: 1.0 },
            subspace: None,
            segments: 1000,
            samples: 20_000,
        });
        let round = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(round, cfg);
    }
}
