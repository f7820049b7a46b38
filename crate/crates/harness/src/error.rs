use std::path::PathBuf;

use chaoslab::error::ChaosError;
use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("output path {path} is not writable: {source}")]
    Output { path: PathBuf, source: std::io::Error },

    #[error("numerical error: {0}")]
    Numeric(#[from] ChaosError),

    #[error("cannot read {path}: {reason}")]
    Data { path: PathBuf, reason: String },
}

impl HarnessError {
    /// Process exit code: 2 for configuration and output-path problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Output { .. } => 2,
            Self::Numeric(_) | Self::Data { .. } => 3,
        }
    }

    pub(crate) fn output(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Output { path: path.into(), source }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Self::Data {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
