use thiserror::Error;

use crate::entropy::HealthFailure;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A generator register reached a state its invariants forbid.
    #[error("corrupted state: {0}")]
    CorruptedState(String),

    /// Output requested before the burn-in period completed.
    #[error("generator not ready: {steps_taken} of {burn_in} burn-in steps taken")]
    NotReady { steps_taken: u64, burn_in: u64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("entropy source unhealthy: {0}")]
    SourceUnhealthy(HealthFailure),

    #[error("entropy source exhausted after {0} words")]
    Exhausted(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
