//! Batch experiments: TOML configuration, convergence runs with CSV and text
//! reports, and the invariant verification suite.

mod config;
mod run;
mod verify;

use std::fmt;

pub use config::{load_config, preset_table, ExperimentConfig, Prepared, Thresholds};
pub use run::{run, write_outputs, RunOutcome, CSV_NAME, SUMMARY_NAME};
pub use verify::{verify, verify_with_table, CheckResult, VerifyReport};

/// Failure classes of an experiment, each with its own process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentError {
    /// Unreadable, malformed or inconsistent configuration.
    Config(String),
    /// Numerical failure, e.g. quadrature non-convergence.
    Numeric(String),
    /// Computation finished but a threshold or invariant failed.
    Threshold(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Numeric(_) => 2,
            ExperimentError::Threshold(_) => 3,
        }
    }
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Config(m) => write!(f, "config error: {m}"),
            ExperimentError::Numeric(m) => write!(f, "numeric failure: {m}"),
            ExperimentError::Threshold(m) => write!(f, "threshold failure: {m}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<crate::Error> for ExperimentError {
    fn from(e: crate::Error) -> Self {
        ExperimentError::Numeric(e.to_string())
    }
}
