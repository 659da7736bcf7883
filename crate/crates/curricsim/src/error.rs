//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Task id not present in the state it was used against.
    #[error("unknown task {id} (task count {count})")]
    UnknownTask { id: usize, count: usize },

    /// An operation was called in a mode or state that forbids it.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Configuration failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),

    /// Two runs cannot be compared.
    #[error("run mismatch: {0}")]
    Mismatch(String),

    /// The closed-form optimum does not exist (zero curvature).
    #[error("no optimum: {0}")]
    NoOptimum(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
