//! IO, file formats, model persistence and the command implementations
//! behind the `preasp` binary. All algorithmic work lives in `preasp-core`;
//! this crate only moves bytes and orchestrates.

pub mod annotations;
pub mod commands;
pub mod config;
pub mod features_csv;
pub mod model_io;
pub mod predictions;
pub mod report;
pub mod wav;

mod jobs;

use thiserror::Error;

/// Process-level error classes; the binary maps them onto exit codes
/// (0 success, 1 usage, 2 data, 3 internal).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
