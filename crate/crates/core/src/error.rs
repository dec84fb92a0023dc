use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point count must be at least 1")]
    EmptySpace,
    #[error("weights must be nonnegative and sum to exactly 1 (sum is {0})")]
    BadWeights(String),
    #[error("function table must have at least one row")]
    EmptyClass,
    #[error("value {value} at row {row}, column {col} is outside [0, 1]")]
    ValueOutOfRange { row: usize, col: usize, value: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what} exceeds the cap of {cap}; {hint}")]
    CapExceeded {
        what: String,
        cap: String,
        hint: &'static str,
    },
    #[error("row {0} is not a 0/1 indicator")]
    NotIndicator(usize),
    #[error("cannot parse rational {0:?}")]
    ParseRational(String),
    #[error("format error on line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("scenario error: {0}")]
    Schema(String),
    #[error("integer scale overflow: common denominators are too large for exact integer enumeration")]
    ScaleOverflow,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
