use thiserror::Error;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("invalid field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("chain not ergodic under policy")]
    NotErgodic,
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl MdpError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        MdpError::Invalid { field, reason: reason.into() }
    }
}
