use thiserror::Error;

/// Errors raised by sampling, construction and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0} (must be at least 1)")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("invalid intensity {0} (must be finite and non-negative)")]
    InvalidIntensity(f64),

    #[error("unsupported exponent {0} (must be finite and non-negative)")]
    UnsupportedExponent(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range for sample of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("point lies outside the sampling window")]
    PointOutsideWindow,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

impl Error {
    /// True for errors caused by exhausted resources rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
