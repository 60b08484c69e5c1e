use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum NufiError {
    /// Caller passed arguments that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    /// The charge density handed to the Poisson solver is not neutral.
    #[error("numerical consistency error: residual mean {residual_mean:e} exceeds tolerance {tolerance:e}")]
    NonNeutral { residual_mean: f64, tolerance: f64 },

    /// A flow evaluation needs more stored fields than the history holds.
    #[error("insufficient history: need {needed} stored fields, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    /// Damping-rate fit could not find enough peaks.
    #[error("fit error: found {peaks} peaks in window, need at least 3")]
    Fit { peaks: usize },

    /// Malformed checkpoint file.
    #[error("checkpoint format error in {path}: {reason}")]
    Checkpoint { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NufiError>;
