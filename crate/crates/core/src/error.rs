use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("empty sample vector")]
    Empty,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular weighted autocorrelation matrix")]
    Singular,

    #[error("density undefined for discrete noise model `{0}`")]
    UnsupportedDensity(&'static str),

    #[error("quadrature did not reach tolerance: estimate {estimate}, error estimate {error_estimate}")]
    Quadrature { estimate: f64, error_estimate: f64 },

    #[error("degenerate trace: {0}")]
    DegenerateTrace(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("calibration failed: {0}")]
    Calibration(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
