//! Command-line front end: config resolution, orchestration and persistence.

mod commands;
mod config;
mod error;

pub use commands::{cmd_limit, cmd_rates, cmd_report, cmd_residual, cmd_train, cmd_variance};
pub use config::{ForestSpec, MdpSource, Preset, RunConfig};
pub use error::{CliError, Result};
