use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The quotient stream or the refinement cap ran out before a decision was reached.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("rigidity sequence too short: {0}")]
    SequenceTooShort(String),

    #[error("construction retries exhausted at level {level} after {attempts} attempts: {last}")]
    RetriesExhausted {
        level: usize,
        attempts: usize,
        last: String,
    },

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("certification failed: {0}")]
    CertificationFailed(String),

    #[error("resonance could not be decided: {0}")]
    ResonanceDetected(String),

    #[error("block too large to materialize: {0}")]
    BlockTooLarge(String),

    #[error("empty block: {0}")]
    EmptyBlock(String),

    #[error("internal invariant broken: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn exhausted(msg: impl Into<String>) -> Self {
        Error::PrecisionExhausted(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
