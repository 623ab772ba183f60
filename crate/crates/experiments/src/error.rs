use limit_odes::LimitError;
use thiserror::Error;
use trainer::SeriesError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("invalid field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ExperimentError::Invalid { field, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
