use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("input index {index} is not a member of U (|U| = {len})")]
    InputNotInSet { index: usize, len: usize },
    #[error("model violation: state {state:?} left the admissible domain at step {step}")]
    ModelViolation { step: usize, state: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("not a cover: point {witness:?} is not covered")]
    NotACover { witness: Vec<f64> },
    #[error("observability uncertified for s = {s}: {reason}")]
    ObservabilityUncertified { s: usize, reason: String },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("resolution too coarse: {0}")]
    Resolution(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("undefined data rate: the coder-controller has no certified invariance time")]
    UndefinedRate,
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
