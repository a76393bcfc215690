//! Running experiments: configuration, the episode loop, policy export and
//! import, rollouts of learned behavior and their evaluation.

mod compare;
mod config;
mod experiment;
mod output;
mod policy;
mod rollout;

pub use compare::{compare_option_sets, trailing_mean, CompareReport};
pub use config::{EnvironmentConfig, FlatConfig, FormulaConfig, ModeName, OptionsConfig, PolicyConfig, PolicyOverride, RunConfig};
pub use experiment::{EpisodeLog, Experiment, TrainOutput};
pub use output::{option_counts_csv, rewards_csv, trace_csv, Manifest};
pub use policy::PolicyBundle;
pub use rollout::{evaluate_spec, read_trace_csv, rollout, strip_persistence, SpecReport, TraceRow};

use std::path::Path;

use thiserror::Error;

use crate::env::EnvError;
use crate::learn::LearnError;
use crate::options::OptionError;
use crate::stl::StlError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Formula(#[from] StlError),
    #[error("{0}")]
    Options(#[from] OptionError),
    #[error("{0}")]
    Learn(#[from] LearnError),
    #[error("{0}")]
    Env(#[from] EnvError),
    #[error("{0}")]
    Policy(String),
    #[error("{0}")]
    Trace(String),
}

impl HarnessError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        HarnessError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    /// Short category name for command-line error lines.
    pub fn category(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Io { .. } => "io",
            HarnessError::Formula(_) => "formula",
            HarnessError::Options(_) => "options",
            HarnessError::Learn(_) => "learning",
            HarnessError::Env(_) => "environment",
            HarnessError::Policy(_) => "policy",
            HarnessError::Trace(_) => "trace",
        }
    }
}
