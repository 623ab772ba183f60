//! Metrics, sweeps and statistics comparing trained networks with the limit
//! expansion.

mod error;
pub mod metrics;
pub mod report;
pub mod stats;
pub mod sweeps;

pub use error::{ExperimentError, Result};
pub use metrics::{actor_mse, bellman_gap, policy_from_table, policy_gradient_norm, policy_reward, Metric, MetricTag};
pub use report::{ExperimentSummary, ReportRow, Summary};
pub use stats::{fit_rate, ols, paired_t_greater, sample_std, RateFit};
pub use sweeps::{
    expansion_prediction, expansion_residual, init_variance, large_time_diagnostics, order0_error_curve,
    rate_fit_from_series, rate_sweep, residual_from_series, train_trials, variance_from_series, variance_sweep,
    InitVariance, LargeTime, RateSweep, ResidualCurve, TrialSpec, VarianceCurve,
};
