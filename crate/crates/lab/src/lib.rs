//! Scenario runner for `parconc-core`: TOML scenario files in, JSON records
//! and CSV curves out.

use std::path::PathBuf;

pub mod config;
pub mod predict;
pub mod run;
pub mod suite;

pub use config::{CheckConfig, CheckKind, GridConfig, MaximalConfig, ScenarioConfig};
pub use run::{run_config, run_scenario, CheckDetail, CheckResult, RunOptions, RunRecord};
pub use suite::{run_suite, SuiteEntry, SuiteReport};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid scenario {}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error("{0}")]
    Options(String),
    #[error(transparent)]
    Core(#[from] parconc_core::Error),
}
