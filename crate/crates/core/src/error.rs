use thiserror::Error;

/// Rejected inputs and runtime failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("frame too short: need {needed} samples, have {available}")]
    FrameTooShort { needed: usize, available: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("ML enumeration budget exceeded ({candidates} candidates > {budget}); use mmse_detect")]
    BudgetExceeded { candidates: f64, budget: usize },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
