use std::path::Path;

use finicode_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    /// An exact identity or a checked invariant failed; the report was still written.
    #[error("identity check failed: {0}")]
    Identity(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("writing output: {0}")]
    Output(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Identity(_) => 3,
            CliError::Core(e) => match e {
                CoreError::InsufficientCoverage { .. } => 4,
                CoreError::InvalidArgument(_)
                | CoreError::InvalidSymbol { .. }
                | CoreError::InvalidProbabilityVector(_)
                | CoreError::NonDyadicProbability { .. }
                | CoreError::Reducible(_) => 2,
                CoreError::LadderUnavailable { .. } | CoreError::NonDyadicMass(_) => 1,
            },
            CliError::Io { .. } | CliError::Output(_) => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
