use thiserror::Error;

/// Errors raised by the library. Every enumeration that can blow up takes a
/// candidate budget and reports [`Error::ResourceExceeded`] instead of
/// truncating silently.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular")]
    Singular,

    #[error("{what}: needs {needed} candidates, budget is {budget}")]
    ResourceExceeded {
        what: String,
        needed: u128,
        budget: u128,
    },

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
