//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is out of range or inconsistent
    /// (bad dimensions, mode index out of range, blocks that do not fit).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data failed a numerical validity check (non-unitary matrix,
    /// unnormalized wavefunction, mismatched dual-route evaluation).
    #[error("validation failed: {0}")]
    Validation(String),

    /// A series evaluation did not meet the stopping rule within the term cap.
    #[error("series did not converge within {max_terms} terms")]
    Convergence { max_terms: usize },

    /// The zero vector has no Schmidt decomposition.
    #[error("zero state has no Schmidt decomposition")]
    ZeroState,

    /// Malformed JSON input.
    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
