//! Command-line runs over `pauli_core`: configuration, orchestration, and
//! CSV tables with JSON metadata sidecars.

pub mod commands;
pub mod config;
pub mod output;

use std::process::ExitCode;

/// Failures of a run, each mapped to its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            LabError::Config(_) => 2,
            LabError::Check(_) => 3,
            LabError::Solver(_) | LabError::Io(_) => 4,
        })
    }
}

impl From<pauli_core::Error> for LabError {
    fn from(e: pauli_core::Error) -> Self {
        use pauli_core::Error as E;
        match e {
            E::InvalidParameter { .. } | E::IndexOutOfRange { .. } | E::ShapeMismatch { .. } | E::LevelCap { .. } => {
                LabError::Config(e.to_string())
            }
            _ => LabError::Solver(e.to_string()),
        }
    }
}

impl From<csv::Error> for LabError {
    fn from(e: csv::Error) -> Self {
        LabError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Io(std::io::Error::other(e))
    }
}

pub type LabResult<T> = Result<T, LabError>;
