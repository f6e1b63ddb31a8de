//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by configuration, integration, and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// An influence-function specification failed validation.
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    /// A system or scenario parameter failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Vectors of incompatible dimension were combined.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A time outside the covered domain was queried.
    #[error("time {t} outside domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    /// The integrator produced a non-finite or runaway state.
    #[error("integration fault at t = {time}: {reason}")]
    IntegrationFault { time: f64, reason: String },

    /// A diagnostic was requested on a trajectory that is too short.
    #[error("horizon {horizon} too short: {required}")]
    HorizonTooShort { horizon: f64, required: String },
}

pub type Result<T> = std::result::Result<T, Error>;
