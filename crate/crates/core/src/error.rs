use std::path::PathBuf;

use thiserror::Error;

use crate::linalg::LinalgError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A Pauli string with an odd number of σʸ factors has an imaginary
    /// overall phase and cannot be represented as a real matrix.
    #[error("Pauli string has {y_count} σʸ factors; an odd count yields an imaginary matrix")]
    Phase { y_count: usize },

    /// Natural orbitals of two density matrices are only related by a unitary
    /// when both density matrices carry the same trace.
    #[error("natural orbitals are unitarily related only for equal traces (got {left} and {right})")]
    TraceMismatch { left: f64, right: f64 },

    /// Two truncation errors were evaluated in different (basis, m) pairs.
    #[error("truncation errors come from different bases or truncation ranks")]
    BasisMismatch,

    #[error("coupling normalization c_max is zero")]
    ZeroNormalization,

    #[error("distance between points {0} and {1} is not a number")]
    NanDistance(usize, usize),

    #[error("{0}")]
    Resource(String),

    #[error("malformed {kind} data: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("cache integrity check failed for {}: {reason}", path.display())]
    Integrity { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
