//! Configuration-driven runner for the `hgroup` estimators.
//!
//! A run reads one JSON configuration, executes its tasks in order and
//! writes `report.json`, `summary.txt` and per-task CSV traces.

pub mod config;
pub mod run;
pub mod suite;

use std::path::PathBuf;

pub use config::{BodySpec, GroupSpec, RandomFamily, RunConfig, SubspaceSpec, TaskSpec};
pub use run::{evaluate, report_json, run, summarize, Report, RunOptions, RunOutcome, Status, TaskRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
}
