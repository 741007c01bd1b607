use std::path::PathBuf;

use gridsched_core::scenario::ScenarioError;
use gridsched_core::sched_evhvac::SchedError;
use gridsched_core::sched_mgbid::BidError;
use gridsched_optmodel::ModelError;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{file}: {source}")]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: PathBuf, column: String },
    #[error("{file}: slot sequence broken at slot {expected}, found {found}")]
    Sequencing { file: PathBuf, expected: usize, found: String },
    #[error("{file}: {message}")]
    Validation { file: PathBuf, message: String },
    #[error("{file}: at `{path}`: {message}")]
    Config { file: PathBuf, path: String, message: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Schedule(#[from] SchedError),
    #[error(transparent)]
    Bidding(#[from] BidError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl CliError {
    pub fn io(file: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { file: file.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::MissingColumn { .. } => "missing_column",
            CliError::Sequencing { .. } => "sequencing",
            CliError::Validation { .. } => "validation",
            CliError::Config { .. } => "config",
            CliError::Scenario(_) => "scenario",
            CliError::Schedule(SchedError::Infeasible { .. }) | CliError::Bidding(BidError::Infeasible { .. }) => {
                "infeasible"
            }
            CliError::Schedule(_) | CliError::Bidding(_) | CliError::Model(_) => "solve",
        }
    }

    /// Machine-readable form printed on failure.
    pub fn to_json(&self) -> Value {
        let mut detail = json!({ "kind": self.kind(), "message": self.to_string() });
        let extra = match self {
            CliError::Io { file, .. } | CliError::Validation { file, .. } => json!({ "file": file }),
            CliError::MissingColumn { file, column } => json!({ "file": file, "column": column }),
            CliError::Sequencing { file, expected, .. } => json!({ "file": file, "slot": expected }),
            CliError::Config { file, path, .. } => json!({ "file": file, "path": path }),
            CliError::Schedule(SchedError::Infeasible { groups }) => json!({ "requirement_groups": groups }),
            CliError::Bidding(BidError::Infeasible { family }) => json!({ "constraint_family": family }),
            _ => json!({}),
        };
        if let (Some(d), Some(e)) = (detail.as_object_mut(), extra.as_object()) {
            d.extend(e.clone());
        }
        json!({ "error": detail })
    }
}
