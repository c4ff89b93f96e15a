use thiserror::Error;

/// Errors raised by the pricing engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GmwbError {
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("numerical instability at guarantee level {a_index}, wealth node {w_index}")]
    NumericalInstability { a_index: usize, w_index: usize },

    #[error("withdrawal {gamma} exceeds guarantee balance {available}")]
    Admissibility { gamma: f64, available: f64 },

    #[error("guarantee level {level} is not a grid node")]
    OffGrid { level: f64 },

    #[error("interpolation at NaN wealth")]
    NanInput,

    #[error(
        "no sign change of the net liability on [{low}, {high}]: L0(low) = {liability_low}, L0(high) = {liability_high}"
    )]
    NoRoot {
        low: f64,
        high: f64,
        liability_low: f64,
        liability_high: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GmwbError {
    fn from(e: std::io::Error) -> Self {
        GmwbError::Io(e.to_string())
    }
}

impl From<csv::Error> for GmwbError {
    fn from(e: csv::Error) -> Self {
        GmwbError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for GmwbError {
    fn from(e: serde_json::Error) -> Self {
        GmwbError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GmwbError>;

pub(crate) fn invalid<T>(field: &'static str, reason: impl Into<String>) -> Result<T> {
    Err(GmwbError::Validation {
        field,
        reason: reason.into(),
    })
}
