//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter set violates a positivity or mass constraint.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Requested quantity is undefined in the current parameter regime.
    #[error("outside parameter regime: {0}")]
    Regime(String),

    /// State lies outside the domain of the requested chart or operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Supplied state, energy and angular momentum are mutually inconsistent.
    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    /// Malformed run configuration or batch file.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
