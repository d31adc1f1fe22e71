use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Lib(#[from] kronsketch::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = Result<T, CliError>;

/// Process exit status for an error.
pub fn exit_code(e: &CliError) -> i32 {
    use kronsketch::Error as E;
    match e {
        CliError::Usage(_) | CliError::Lib(E::InvalidArgument(_)) => 2,
        CliError::Lib(E::Numeric { .. } | E::UndefinedCorrelation(_)) => 3,
        CliError::Lib(E::SearchExhausted { .. }) => 4,
        _ => 1,
    }
}

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}
