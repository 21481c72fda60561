use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] cauchy_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An invariant of the `check` suite did not hold.
    #[error("{0} invariant check(s) failed")]
    ChecksFailed(usize),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const NUMERICAL: i32 = 3;
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Core(e) if e.is_numerical() => exit::NUMERICAL,
            CliError::Core(_) => exit::VALIDATION,
            CliError::Io { .. } => exit::IO,
            CliError::ChecksFailed(_) => exit::NUMERICAL,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let kind = match self.exit_code() {
            exit::VALIDATION => "validation",
            exit::NUMERICAL => "numerical",
            _ => "io",
        };
        ErrorReport {
            kind,
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}
