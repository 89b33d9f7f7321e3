//! Crate-wide error type.

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector/matrix dimensions do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("factorization failed: non-positive pivot at index {pivot}")]
    Factorization { pivot: usize },

    /// A transformed sub-matrix is not positive definite, i.e. the dependence
    /// matrix is outside the strictly conditionally negative definite class.
    #[error("matrix not strictly conditionally negative definite (offending index tuple {subset:?})")]
    NotStrictlyCnd { subset: Vec<usize> },

    /// Problem size above the supported ceiling.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An integrand evaluated to a non-finite value.
    #[error("integration error: integrand not finite at {location}")]
    NonFiniteIntegrand { location: f64 },

    /// A numerical procedure failed to reach its contract.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Text input violated a format.
    #[error("parse error at line {line}, field {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
