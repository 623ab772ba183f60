use mdp_core::MdpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("chain not ergodic under policy")]
    NotErgodic,
    #[error("order exceeds expansion bracket")]
    OrderExceedsBracket,
    #[error("derivative tensors of order {0} are not supported")]
    UnsupportedOrder(usize),
    #[error("invalid field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("kernel cache: {0}")]
    Cache(String),
}

impl LimitError {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        LimitError::Invalid { field, reason: reason.into() }
    }
}

impl From<MdpError> for LimitError {
    fn from(e: MdpError) -> Self {
        match e {
            MdpError::NotErgodic => LimitError::NotErgodic,
            MdpError::Invalid { field, reason } => LimitError::Invalid { field, reason },
            MdpError::Json(e) => LimitError::invalid("json", e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, LimitError>;
