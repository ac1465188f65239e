//! File formats, run configuration and the command implementations behind
//! the `fpm` binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod formats;

use std::path::Path;

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl From<fpm_core::Error> for CliError {
    fn from(e: fpm_core::Error) -> Self {
        use fpm_core::Error as E;
        let msg = e.to_string();
        match e {
            E::Numerical { .. } => CliError::Numerical(msg),
            E::InvalidGeometry { .. }
            | E::InvalidConfig { .. }
            | E::LedOutOfRange { .. }
            | E::NoLeds
            | E::AberrationShape { .. }
            | E::SubSpectrumOutOfGrid { .. }
            | E::GridMismatch { .. }
            | E::InvalidTruth(_) => CliError::Config(msg),
            _ => CliError::Data(msg),
        }
    }
}
