use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("session cannot finish: {0}")]
    UnfinishableSession(String),

    #[error("score has already been calibrated")]
    AlreadyCalibrated,

    #[error("sample is empty")]
    EmptySample,

    #[error("sample too small: need at least {needed}, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("regressor is identically zero")]
    DegenerateRegressor,

    #[error("report {0} lacks GeneralFeedback")]
    MissingFeedback(usize),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
