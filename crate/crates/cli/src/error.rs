use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing configuration; exits with code 2.
    #[error("config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("missing {artifact}: {path} not found (run `{producer}` first)")]
    MissingArtifact { artifact: &'static str, path: String, producer: &'static str },
    #[error(transparent)]
    Experiment(#[from] experiments::ExperimentError),
    #[error(transparent)]
    Limit(#[from] limit_odes::LimitError),
    #[error(transparent)]
    Mdp(#[from] mdp_core::MdpError),
    #[error(transparent)]
    Series(#[from] trainer::SeriesError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(field: &'static str, reason: impl Into<String>) -> Self {
        CliError::Config { field, reason: reason.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
