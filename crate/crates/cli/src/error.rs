use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or input files that do not match their schema.
    #[error("{0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] oneshot_core::Error),
}

/// The machine-readable form written to stderr on failure.
#[derive(Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 3,
            CliError::Core(oneshot_core::Error::NonConvergence { .. }) => 4,
            CliError::Validation(_) | CliError::Core(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        use oneshot_core::Error as E;
        match self {
            CliError::Validation(_) => "validation",
            CliError::Io { .. } => "io",
            CliError::Core(e) => match e {
                E::Validation(_) => "validation",
                E::Domain(_) => "domain",
                E::DimensionMismatch { .. } => "dimension_mismatch",
                E::Capacity { .. } => "capacity",
                E::NonConvergence { .. } => "non_convergence",
                E::Infeasible(_) => "infeasible",
            },
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
