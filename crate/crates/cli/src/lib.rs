//! Command-line front end for the delayed flocking simulator: config
//! ingestion, simulation runs, certification, beta sweeps, and CSV/JSON
//! emission for plots and test harnesses.
//!
//! Exit-code taxonomy (so harnesses can assert outcomes without parsing):
//! 0 all checks pass, 1 an inequality margin failed, 2 configuration or
//! validation failure, 3 integration fault, 4 no certificate exists (the
//! kernel integral converges).

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

/// Errors carrying their process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("integration fault: {0}")]
    Integration(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Integration(_) => 3,
        }
    }
}

impl From<flock_core::Error> for CliError {
    fn from(err: flock_core::Error) -> Self {
        match err {
            flock_core::Error::IntegrationFault { .. } => CliError::Integration(err.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {err}"))
    }
}
