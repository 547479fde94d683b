use thiserror::Error;

use crate::simulate::Trajectory;

/// Errors produced by the analysis and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("vector component {index} must be positive, got {value}")]
    NonPositive { index: usize, value: f64 },

    #[error("state component {index} is negative ({value})")]
    NegativeState { index: usize, value: f64 },

    #[error("matrix structure violated: {0}")]
    Structure(String),

    #[error("model hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("certificate is not valid: {0}")]
    InvalidCertificate(String),

    #[error("root solver: {0}")]
    Root(String),

    #[error("no finite rate: {0}")]
    NoFiniteRate(String),

    #[error("required limit missing: {0}")]
    MissingLimit(String),

    #[error("delay argument {arg} lies before the initial history window [-{depth}, 0]")]
    HistoryUnderrun { arg: f64, depth: f64 },

    /// Non-finite state. Carries the trajectory up to the last finite sample.
    #[error("state diverged at t = {time}")]
    Diverged {
        time: f64,
        trajectory: Box<Trajectory>,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
