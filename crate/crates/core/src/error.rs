use thiserror::Error;

use crate::lp::LpStatus;
use crate::regions::UserSet;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: wrong shape, non-Hermitian matrix, mismatched lengths.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NegativeEigenvalue { eigenvalue: f64 },

    /// Combinatorial size guard (antichain enumeration, exact region).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("linear program did not reach an optimum: {0:?}")]
    Lp(LpStatus),

    #[error("stream {stream} has negative rate {value:e}")]
    NegativeRate { stream: UserSet, value: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
