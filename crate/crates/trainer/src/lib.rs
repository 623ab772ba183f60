//! Online actor-critic SGD with two sampling chains.

mod schedule;
mod series;
mod sgd;

pub use schedule::{eta_limit, exploration_policy, zeta_limit, Schedule};
pub use series::{RunManifest, SeriesError, SnapshotSeries, KINDS};
pub use sgd::{sgd_step, train, train_from, TrainConfig, Trainer, TrainerState};
