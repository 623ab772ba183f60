use limit_odes::{expansion_order, integrate_limit, law_expectation, KernelTables, LimitConfig, LimitError, LimitSolution};
use mdp_core::{seed::derive_seed, FiniteMdp};
use networks::{InitLaw, ScaledNetwork, Sigmoid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use trainer::{train, SnapshotSeries, TrainConfig};

use crate::metrics::{bellman_gap, policy_from_table, policy_gradient_norm, policy_reward};
use crate::stats::{fit_rate, mean, sample_std, RateFit};
use crate::{ExperimentError, Result};

/// Shared knobs of a batch of training runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub width_n: usize,
    pub beta: f64,
    pub t_end: f64,
    pub trials: usize,
    pub seed: u64,
    /// Rescaled time between snapshots.
    pub snapshot_dt: f64,
    pub alpha: f64,
    pub critic_law: InitLaw,
    pub actor_law: InitLaw,
}

impl TrialSpec {
    pub fn new(width_n: usize, beta: f64, t_end: f64, trials: usize, seed: u64) -> Self {
        TrialSpec {
            width_n,
            beta,
            t_end,
            trials,
            seed,
            snapshot_dt: 0.05,
            alpha: 1.0,
            critic_law: InitLaw::default(),
            actor_law: InitLaw::default(),
        }
    }

    /// Config of trial `i`, seeded by `hash(seed, i)`.
    pub fn trial_config(&self, i: usize) -> TrainConfig {
        TrainConfig {
            snapshot_stride: Some(((self.width_n as f64 * self.snapshot_dt).round() as usize).max(1)),
            alpha: self.alpha,
            critic_law: self.critic_law,
            actor_law: self.actor_law,
            ..TrainConfig::new(self.width_n, self.beta, self.t_end, derive_seed(self.seed, &[i as u64]))
        }
    }
}

/// Independent training runs, in trial order.
pub fn train_trials(mdp: &FiniteMdp, spec: &TrialSpec) -> Vec<SnapshotSeries> {
    (0..spec.trials).into_par_iter().map(|i| train(mdp, &spec.trial_config(i))).collect()
}

fn check_aligned(series: &[SnapshotSeries]) -> Result<()> {
    let first = series.first().ok_or_else(|| ExperimentError::invalid("trials", "no snapshot series"))?;
    if series.iter().any(|s| s.times != first.times) {
        return Err(ExperimentError::invalid("trials", "snapshot grids differ between trials"));
    }
    Ok(())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Trial-mean over time of `max_(x,a) |X^N - X^(0)|` for `kind` in `Q`, `P`.
pub fn order0_error_curve(series: &[SnapshotSeries], limit: &LimitSolution, kind: &str) -> Result<Vec<f64>> {
    check_aligned(series)?;
    let times = &series[0].times;
    let mut curve = Vec::with_capacity(times.len());
    for (i, t) in times.iter().enumerate() {
        let reference = limit.at(kind, 0, *t)?;
        let errs: Vec<f64> = series.iter().map(|s| max_abs_diff(&s.kind(kind)[i], &reference)).collect();
        curve.push(mean(&errs));
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSweep {
    pub beta: f64,
    pub q: RateFit,
    pub p: RateFit,
    pub q_errors: Vec<f64>,
    pub p_errors: Vec<f64>,
}

/// Rate fit from persisted runs: `series[i]` holds the trials at `widths[i]`.
pub fn rate_fit_from_series(beta: f64, widths: &[usize], series: &[Vec<SnapshotSeries>], limit: &LimitSolution) -> Result<RateSweep> {
    if widths.len() != series.len() {
        return Err(ExperimentError::invalid("widths", "one trial batch per width"));
    }
    let sup = |kind: &str| -> Result<Vec<f64>> {
        series
            .iter()
            .map(|batch| Ok(order0_error_curve(batch, limit, kind)?.into_iter().fold(0.0, f64::max)))
            .collect()
    };
    let q_errors = sup("Q")?;
    let p_errors = sup("P")?;
    Ok(RateSweep { beta, q: fit_rate(widths, &q_errors), p: fit_rate(widths, &p_errors), q_errors, p_errors })
}

fn check_widths(widths: &[usize]) -> Result<()> {
    let (lo, hi) = (widths.iter().min(), widths.iter().max());
    match (lo, hi) {
        (Some(&lo), Some(&hi)) if widths.len() >= 3 && lo > 0 && hi >= 10 * lo => Ok(()),
        _ => Err(ExperimentError::invalid("widths", "need at least 3 positive widths spanning a decade")),
    }
}

/// Trains every width, integrates the order-0 limit on `h_ode` and fits the
/// log error against log width.
#[allow(clippy::too_many_arguments)]
pub fn rate_sweep(
    mdp: &FiniteMdp,
    beta: f64,
    widths: &[usize],
    trials: usize,
    t_end: f64,
    seed: u64,
    kernels: &KernelTables,
    h_ode: f64,
) -> Result<RateSweep> {
    check_widths(widths)?;
    let limit = integrate_limit(mdp, kernels, &LimitConfig { h_ode, ..LimitConfig::new(t_end, None) })?;
    let series: Vec<Vec<SnapshotSeries>> =
        widths.iter().map(|&n| train_trials(mdp, &TrialSpec::new(n, beta, t_end, trials, seed))).collect();
    rate_fit_from_series(beta, widths, &series, &limit)
}

/// Per-time standard deviations across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCurve {
    pub beta: f64,
    pub width_n: usize,
    pub times: Vec<f64>,
    /// Max over pairs of the std of `f_t^N(x,a)`.
    pub f_std: Vec<f64>,
    /// Max over pairs of the std of `Q_t^N(x,a)`.
    pub q_std: Vec<f64>,
    pub reward_std: Vec<f64>,
    pub reward_median: Vec<f64>,
}

impl VarianceCurve {
    pub fn terminal_f_std(&self) -> f64 {
        *self.f_std.last().expect("non-empty curve")
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn variance_from_series(mdp: &FiniteMdp, beta: f64, width_n: usize, series: &[SnapshotSeries]) -> Result<VarianceCurve> {
    check_aligned(series)?;
    let times = series[0].times.clone();
    let s = mdp.n_pairs();
    let max_pair_std = |kind: &str, i: usize| {
        (0..s)
            .map(|pair| sample_std(&series.iter().map(|r| r.kind(kind)[i][pair]).collect::<Vec<_>>()))
            .fold(0.0, f64::max)
    };
    let mut curve = VarianceCurve {
        beta,
        width_n,
        times: times.clone(),
        f_std: vec![],
        q_std: vec![],
        reward_std: vec![],
        reward_median: vec![],
    };
    for i in 0..times.len() {
        curve.f_std.push(max_pair_std("f", i));
        curve.q_std.push(max_pair_std("Q", i));
        let rewards: Vec<f64> = series.iter().map(|r| policy_reward(mdp, &policy_from_table(mdp, &r.f[i]))).collect();
        curve.reward_std.push(sample_std(&rewards));
        curve.reward_median.push(median(&rewards));
    }
    Ok(curve)
}

/// One curve per `beta`, each from `trials` fresh runs at `width_n`.
pub fn variance_sweep(
    mdp: &FiniteMdp,
    betas: &[f64],
    width_n: usize,
    trials: usize,
    t_end: f64,
    seed: u64,
) -> Result<Vec<VarianceCurve>> {
    if trials < 20 {
        return Err(ExperimentError::invalid("trials", "variance sweeps need at least 20 trials"));
    }
    betas
        .iter()
        .map(|&b| {
            let runs = train_trials(mdp, &TrialSpec::new(width_n, b, t_end, trials, seed));
            variance_from_series(mdp, b, width_n, &runs)
        })
        .collect()
}

/// Sample variance of the rescaled initial critic output against the
/// Monte Carlo value of its limiting variance, per pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitVariance {
    pub sample_var: Vec<f64>,
    pub limit_var: Vec<f64>,
    pub limit_se: Vec<f64>,
}

pub fn init_variance(
    mdp: &FiniteMdp,
    width_n: usize,
    beta: f64,
    law: &InitLaw,
    inits: usize,
    seed: u64,
    mc_samples: usize,
) -> InitVariance {
    let s = mdp.n_pairs();
    let dim = mdp.input_dim();
    let rescale = (width_n as f64).powf(beta - 0.5);
    let outputs: Vec<Vec<f64>> = (0..inits)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[i as u64]));
            let net = ScaledNetwork::init(width_n, beta, dim, law, &mut rng);
            net.table(mdp).into_iter().map(|v| v * rescale).collect()
        })
        .collect();
    let sample_var = (0..s)
        .map(|pair| sample_std(&outputs.iter().map(|o| o[pair]).collect::<Vec<_>>()).powi(2))
        .collect();
    let (limit_var, limit_se) = (0..s)
        .map(|pair| {
            let xi = mdp.input(pair).to_vec();
            law_expectation(law, dim, mc_samples, derive_seed(seed, &[u64::MAX, pair as u64]), move |c, w| {
                let z: f64 = w.iter().zip(&xi).map(|(a, b)| a * b).sum();
                (c * Sigmoid::eval(z)).powi(2)
            })
        })
        .unzip();
    InitVariance { sample_var, limit_var, limit_se }
}

/// Expansion prediction of `Q` truncated at `order`. At the stored top
/// order with a fluctuation term, `ic` is its initial condition.
pub fn expansion_prediction(limit: &LimitSolution, width_n: usize, t: f64, order: usize, ic: Option<&[f64]>) -> Result<Vec<f64>> {
    if order > limit.max_order {
        return Err(LimitError::OrderExceedsBracket.into());
    }
    if order == limit.max_order {
        return Ok(limit.predict_network(width_n, t, ic).q);
    }
    let eps = (width_n as f64).powf(limit.config.beta.unwrap_or(1.0) - 1.0);
    let mut out = limit.at("Q", 0, t)?;
    for m in 1..=order {
        let w = eps.powi(m as i32);
        for (o, v) in out.iter_mut().zip(limit.at("Q", m, t)?) {
            *o += w * v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualCurve {
    pub order: usize,
    pub times: Vec<f64>,
    /// Trial-mean of `max_(x,a) |Q^N - prediction|` at each snapshot.
    pub mean: Vec<f64>,
    pub sup: f64,
    /// Per-trial time average of the same max error.
    pub per_trial: Vec<f64>,
}

/// Residual of the order-`order` expansion. When the prediction carries the
/// fluctuation term its initial condition is the trial's own rescaled
/// initial outputs `N^(beta-1/2) (Q_0^N, P_0^N)`.
pub fn residual_from_series(series: &[SnapshotSeries], limit: &LimitSolution, width_n: usize, order: usize) -> Result<ResidualCurve> {
    check_aligned(series)?;
    let beta = limit.config.beta.unwrap_or(1.0);
    let rescale = (width_n as f64).powf(beta - 0.5);
    let times = series[0].times.clone();
    let preds: Vec<Vec<f64>> = if order == limit.max_order && limit.terminal {
        vec![]
    } else {
        times.iter().map(|t| expansion_prediction(limit, width_n, *t, order, None)).collect::<Result<_>>()?
    };
    let errs: Vec<Vec<f64>> = series
        .iter()
        .map(|run| {
            let ic: Vec<f64> = run.q[0].iter().chain(&run.p[0]).map(|v| v * rescale).collect();
            times
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let own;
                    let pred = if preds.is_empty() {
                        own = expansion_prediction(limit, width_n, *t, order, Some(&ic))?;
                        &own
                    } else {
                        &preds[i]
                    };
                    Ok(max_abs_diff(&run.q[i], pred))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mean_curve: Vec<f64> = (0..times.len()).map(|i| mean(&errs.iter().map(|e| e[i]).collect::<Vec<_>>())).collect();
    Ok(ResidualCurve {
        order,
        sup: mean_curve.iter().cloned().fold(0.0, f64::max),
        per_trial: errs.iter().map(|e| mean(e)).collect(),
        times,
        mean: mean_curve,
    })
}

/// Trains `trials` runs and measures the order-`order` expansion residual.
#[allow(clippy::too_many_arguments)]
pub fn expansion_residual(
    mdp: &FiniteMdp,
    beta: f64,
    width_n: usize,
    trials: usize,
    t_end: f64,
    seed: u64,
    order: usize,
    kernels: &KernelTables,
    h_ode: f64,
) -> Result<ResidualCurve> {
    if order > expansion_order(beta)? {
        return Err(LimitError::OrderExceedsBracket.into());
    }
    let cfg = LimitConfig { h_ode, max_order: Some(order), ..LimitConfig::new(t_end, Some(beta)) };
    let limit = integrate_limit(mdp, kernels, &cfg)?;
    let runs = train_trials(mdp, &TrialSpec::new(width_n, beta, t_end, trials, seed));
    residual_from_series(&runs, &limit, width_n, order)
}

/// Order-0 large-time diagnostics along the limit grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeTime {
    pub times: Vec<f64>,
    /// `max |Q^(0)_t - V^(f_t)| / eta_t`.
    pub gap_ratio: Vec<f64>,
    pub grad_norm: Vec<f64>,
}

pub fn large_time_diagnostics(mdp: &FiniteMdp, limit: &LimitSolution, stride: usize) -> Result<LargeTime> {
    let q = limit.table("Q")?;
    let f = limit.table("f")?;
    let mut out = LargeTime { times: vec![], gap_ratio: vec![], grad_norm: vec![] };
    let last = limit.times.len() - 1;
    for (i, t) in limit.times.iter().enumerate() {
        if i % stride.max(1) != 0 && i != last {
            continue;
        }
        let policy = policy_from_table(mdp, &f[0][i]);
        out.times.push(*t);
        out.gap_ratio.push(bellman_gap(mdp, &q[0][i], &policy) / trainer::eta_limit(*t));
        out.grad_norm.push(policy_gradient_norm(mdp, &policy).map_err(LimitError::from)?);
    }
    Ok(out)
}
