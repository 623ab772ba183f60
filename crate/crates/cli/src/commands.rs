use std::path::{Path, PathBuf};
use std::time::Instant;

use experiments::report::{rate_rows, rate_summary, residual_rows, rows_to_csv, variance_rows};
use experiments::{
    paired_t_greater, rate_fit_from_series, residual_from_series, train_trials, variance_sweep, ExperimentSummary,
    Summary, TrialSpec,
};
use limit_odes::{expansion_order, integrate_limit, KernelSpec, KernelTables, LimitConfig, LimitSolution};
use mdp_core::seed::derive_seed;
use serde::Serialize;
use trainer::{RunManifest, SnapshotSeries};

use crate::{CliError, Result, RunConfig};

const RATE_TOL: f64 = 0.15;
const RATE_MIN_R2: f64 = 0.8;

fn train_dir(out: &Path, beta: f64, width: usize) -> PathBuf {
    out.join("train").join(format!("beta{beta}_n{width}"))
}

fn trial_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("trial{i:03}.csv"))
}

fn limit_stem(beta: f64) -> String {
    format!("beta{beta}")
}

fn write_manifest(path: &Path, cfg: &RunConfig, start: Instant) -> Result<()> {
    let m = RunManifest::new(serde_json::to_value(cfg)?, cfg.seed(), start.elapsed().as_secs_f64());
    m.write(path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn trial_spec(cfg: &RunConfig, beta: f64, width: usize) -> TrialSpec {
    TrialSpec::new(width, beta, cfg.t_end(), cfg.trials(), cfg.seed())
}

/// Trains `trials` runs per width and writes one CSV per run plus a manifest
/// per width. Trains every entry of `widths` when the caller set it,
/// otherwise `width_n` alone.
pub fn cmd_train(user: RunConfig) -> Result<Vec<PathBuf>> {
    let explicit_widths = user.widths.is_some();
    let cfg = user.resolve()?;
    let beta = cfg.beta()?;
    let widths = if explicit_widths { cfg.widths()? } else { vec![cfg.width_n()?] };
    let mdp = cfg.mdp()?;
    let mut dirs = Vec::new();
    for n in widths {
        let start = Instant::now();
        let dir = train_dir(cfg.out(), beta, n);
        std::fs::create_dir_all(&dir)?;
        let runs = train_trials(&mdp, &trial_spec(&cfg, beta, n));
        for (i, run) in runs.iter().enumerate() {
            run.write_csv(&trial_path(&dir, i))?;
        }
        let width_cfg = RunConfig { width_n: Some(n), ..cfg.clone() };
        write_manifest(&dir.join("manifest.json"), &width_cfg, start)?;
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Integrates the limit system at `beta` (order 0 only when `beta = 1`).
pub fn cmd_limit(user: RunConfig) -> Result<PathBuf> {
    let start = Instant::now();
    let cfg = user.resolve()?;
    let beta = cfg.beta()?;
    let mdp = cfg.mdp()?;
    let (series_beta, depth) = if beta < 1.0 {
        (Some(beta), cfg.order.unwrap_or(expansion_order(beta)?).max(1))
    } else {
        if cfg.order.unwrap_or(0) > 0 {
            return Err(CliError::config("order", "beta = 1 has no corrections"));
        }
        (None, 1)
    };
    let spec = KernelSpec { mc_samples: cfg.mc_samples(), mc_seed: cfg.seed(), depth, ..KernelSpec::default() };
    let kernels = KernelTables::load_or_build(&cfg.out().join("kernels"), &mdp, &spec)?;
    let lcfg = LimitConfig {
        h_ode: cfg.h_ode(),
        max_order: cfg.order,
        random_ic_seed: series_beta.map(|_| derive_seed(cfg.seed(), &[1])),
        ..LimitConfig::new(cfg.t_end(), series_beta)
    };
    let sol = integrate_limit(&mdp, &kernels, &lcfg)?;
    let dir = cfg.out().join("limit");
    let stem = limit_stem(beta);
    sol.write(&dir, &stem, 1)?;
    write_manifest(&dir.join(format!("{stem}.manifest.json")), &cfg, start)?;
    Ok(dir.join(format!("{stem}.csv")))
}

fn read_limit(cfg: &RunConfig, beta: f64) -> Result<LimitSolution> {
    let dir = cfg.out().join("limit");
    let stem = limit_stem(beta);
    let csv = dir.join(format!("{stem}.csv"));
    if !csv.exists() || !dir.join(format!("{stem}.json")).exists() {
        return Err(CliError::MissingArtifact {
            artifact: "LimitSolution",
            path: csv.display().to_string(),
            producer: "limit",
        });
    }
    Ok(LimitSolution::read(&dir, &stem)?)
}

fn read_trials(cfg: &RunConfig, beta: f64, width: usize) -> Result<Vec<SnapshotSeries>> {
    let dir = train_dir(cfg.out(), beta, width);
    (0..cfg.trials())
        .map(|i| {
            let path = trial_path(&dir, i);
            if !path.exists() {
                return Err(CliError::MissingArtifact {
                    artifact: "SnapshotSeries",
                    path: path.display().to_string(),
                    producer: "train",
                });
            }
            Ok(SnapshotSeries::read_csv(&path)?)
        })
        .collect()
}

/// Fits the order-0 error rate from persisted runs and the persisted limit.
pub fn cmd_rates(user: RunConfig) -> Result<PathBuf> {
    let start = Instant::now();
    let cfg = user.resolve()?;
    let beta = cfg.beta()?;
    let widths = cfg.widths()?;
    let limit = read_limit(&cfg, beta)?;
    let series = widths.iter().map(|&n| read_trials(&cfg, beta, n)).collect::<Result<Vec<_>>>()?;
    let sweep = rate_fit_from_series(beta, &widths, &series, &limit)?;
    let dir = cfg.out().join("rates");
    std::fs::create_dir_all(&dir)?;
    let stem = format!("beta{beta}");
    let path = dir.join(format!("{stem}.json"));
    write_json(&path, &sweep)?;
    std::fs::write(dir.join(format!("{stem}.csv")), rows_to_csv(&rate_rows(&sweep, cfg.t_end())))?;
    write_manifest(&dir.join(format!("{stem}.manifest.json")), &cfg, start)?;
    let summary = Summary { experiments: vec![rate_summary(&sweep, RATE_TOL, RATE_MIN_R2)] };
    summary.write(&cfg.out().join(format!("rates_{stem}.summary.json")))?;
    Ok(path)
}

/// Trains every beta in `betas` at `width_n` and writes the std curves.
pub fn cmd_variance(user: RunConfig) -> Result<PathBuf> {
    let start = Instant::now();
    let cfg = user.resolve()?;
    let betas = cfg.betas()?;
    let width = cfg.width_n()?;
    let mdp = cfg.mdp()?;
    let curves = variance_sweep(&mdp, &betas, width, cfg.trials(), cfg.t_end(), cfg.seed())?;
    let dir = cfg.out().join("variance");
    std::fs::create_dir_all(&dir)?;
    let stem = format!("n{width}");
    let path = dir.join(format!("{stem}.csv"));
    let rows: Vec<_> = curves.iter().flat_map(variance_rows).collect();
    std::fs::write(&path, rows_to_csv(&rows))?;
    write_json(&dir.join(format!("{stem}.json")), &curves)?;
    write_manifest(&dir.join(format!("{stem}.manifest.json")), &cfg, start)?;

    let mut s = ExperimentSummary { name: format!("variance_n{width}"), ..Default::default() };
    let mut sorted: Vec<_> = curves.iter().map(|c| (c.beta, c.terminal_f_std())).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    if sorted.len() > 1 {
        s.pass.insert("decreasing_in_beta".into(), sorted.windows(2).all(|w| w[1].1 < w[0].1));
    }
    Summary { experiments: vec![s] }.write(&cfg.out().join(format!("variance_{stem}.summary.json")))?;
    Ok(path)
}

/// Residuals of every expansion order up to `order` (default: the highest
/// order in the persisted limit) against the persisted runs at `width_n`.
pub fn cmd_residual(user: RunConfig) -> Result<PathBuf> {
    let start = Instant::now();
    let cfg = user.resolve()?;
    let beta = cfg.beta()?;
    let width = cfg.width_n()?;
    let limit = read_limit(&cfg, beta)?;
    let runs = read_trials(&cfg, beta, width)?;
    let top = cfg.order.unwrap_or(limit.max_order);
    let curves = (0..=top).map(|m| residual_from_series(&runs, &limit, width, m)).collect::<std::result::Result<Vec<_>, _>>()?;
    let dir = cfg.out().join("residual");
    std::fs::create_dir_all(&dir)?;
    let stem = format!("beta{beta}_n{width}");
    let path = dir.join(format!("{stem}.csv"));
    let rows: Vec<_> = curves.iter().flat_map(|c| residual_rows(c, beta, width)).collect();
    std::fs::write(&path, rows_to_csv(&rows))?;
    write_manifest(&dir.join(format!("{stem}.manifest.json")), &cfg, start)?;

    let mut s = ExperimentSummary { name: format!("residual_{stem}"), ..Default::default() };
    for c in &curves[1..] {
        let (_, p) = paired_t_greater(&curves[0].per_trial, &c.per_trial);
        s.pass.insert(format!("order{}_below_order0", c.order), p < 0.05);
    }
    Summary { experiments: vec![s] }.write(&cfg.out().join(format!("residual_{stem}.summary.json")))?;
    Ok(path)
}

/// Merges every summary already written under `dir`.
pub fn cmd_report(dir: &Path) -> Result<Summary> {
    if !dir.exists() {
        return Err(CliError::config("out", format!("{} does not exist", dir.display())));
    }
    let summary = Summary::collect(dir)?;
    summary.write(&dir.join("summary.json"))?;
    Ok(summary)
}
