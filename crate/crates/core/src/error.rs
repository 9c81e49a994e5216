use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An input violates a hypothesis of the decomposition (for example the
    /// level is not above the mean of `f`).
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// A bound that the construction guarantees did not hold. Never expected;
    /// reported with enough context to reproduce.
    #[error("guarantee violated: {0}")]
    Violation(String),

    #[error("search exhausted: {0}")]
    NotFound(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::Io(_)
            | Error::Json(_) => 2,
            Error::Hypothesis(_) | Error::NotFound(_) => 3,
            Error::Violation(_) => 4,
        }
    }
}
