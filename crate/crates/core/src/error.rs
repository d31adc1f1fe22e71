use thiserror::Error;

use crate::intrinsic::SearchTrace;

/// Errors produced by the sketching library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric error at iteration {iteration}: {message}")]
    Numeric { iteration: usize, message: String },

    #[error("intrinsic-dimension search exhausted: doubling past d_max = {d_max}")]
    SearchExhausted { d_max: usize, trace: Box<SearchTrace> },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable short code, used by front ends that map errors to exit statuses.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Numeric { .. } => "numeric-error",
            Error::SearchExhausted { .. } => "search-exhausted",
            Error::UndefinedCorrelation(_) => "undefined-correlation",
            Error::Io(_) => "io-error",
            Error::Serde(_) | Error::Csv(_) => "serialization-error",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

pub(crate) fn ensure_len<T>(what: &str, v: &[T], expected: usize) -> Result<()> {
    if v.len() != expected {
        return invalid(format!("{what}: expected length {expected}, got {}", v.len()));
    }
    Ok(())
}
