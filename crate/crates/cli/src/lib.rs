//! Pipeline orchestration for news-nudge experiments: a TOML config drives
//! six cached stages that write flat files, then render report tables.

pub mod config;
pub mod estimates;
pub mod manifest;
pub mod pipeline;
pub mod report;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::ExperimentConfig;
pub use manifest::RunManifest;
pub use pipeline::{run_pipeline, Pipeline};

/// Pipeline stages in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageName {
    Cohort,
    Assign,
    Simulate,
    Measure,
    Estimate,
    Report,
}

impl StageName {
    pub const ALL: [StageName; 6] = [
        StageName::Cohort,
        StageName::Assign,
        StageName::Simulate,
        StageName::Measure,
        StageName::Estimate,
        StageName::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageName::Cohort => "cohort",
            StageName::Assign => "assign",
            StageName::Simulate => "simulate",
            StageName::Measure => "measure",
            StageName::Estimate => "estimate",
            StageName::Report => "report",
        }
    }
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageName::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| CliError::config(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {msg}")]
    Stage { stage: StageName, msg: String },
    #[error("{stage}: missing {path}; run {upstream} first")]
    MissingUpstream {
        stage: StageName,
        upstream: StageName,
        path: PathBuf,
    },
    #[error("output directory is locked by another run (remove {0} if stale)")]
    Locked(PathBuf),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn stage(stage: StageName, msg: impl fmt::Display) -> Self {
        CliError::Stage {
            stage,
            msg: msg.to_string(),
        }
    }
}
