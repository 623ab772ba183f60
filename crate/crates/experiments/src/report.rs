use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sweeps::{RateSweep, ResidualCurve, VarianceCurve};
use crate::{ExperimentError, Result};

pub const REPORT_HEADER: &str = "experiment,beta,width_n,trial,t,metric,value";

/// One long-format report row; `trial` is empty for across-trial aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub beta: f64,
    pub width_n: usize,
    pub trial: Option<usize>,
    pub t: f64,
    pub metric: String,
    pub value: f64,
}

pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        let trial = r.trial.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{},{},{}", r.experiment, r.beta, r.width_n, trial, r.t, r.metric, r.value);
    }
    out
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_HEADER) {
        return Err(ExperimentError::invalid("report", "missing report header"));
    }
    let bad = |i: usize| ExperimentError::invalid("report", format!("malformed row {}", i + 2));
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let c: Vec<&str> = l.split(',').collect();
            if c.len() != 7 {
                return Err(bad(i));
            }
            Ok(ReportRow {
                experiment: c[0].to_string(),
                beta: c[1].parse().map_err(|_| bad(i))?,
                width_n: c[2].parse().map_err(|_| bad(i))?,
                trial: if c[3].is_empty() { None } else { Some(c[3].parse().map_err(|_| bad(i))?) },
                t: c[4].parse().map_err(|_| bad(i))?,
                metric: c[5].to_string(),
                value: c[6].parse().map_err(|_| bad(i))?,
            })
        })
        .collect()
}

pub fn rate_rows(sweep: &RateSweep, t_end: f64) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for (i, &n) in sweep.q.widths.iter().enumerate() {
        for (metric, v) in [("QError", sweep.q_errors[i]), ("PError", sweep.p_errors[i])] {
            rows.push(ReportRow {
                experiment: "rates".into(),
                beta: sweep.beta,
                width_n: n,
                trial: None,
                t: t_end,
                metric: metric.into(),
                value: v,
            });
        }
    }
    rows
}

pub fn variance_rows(curve: &VarianceCurve) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for (i, t) in curve.times.iter().enumerate() {
        for (metric, v) in [
            ("ActorStd", curve.f_std[i]),
            ("QStd", curve.q_std[i]),
            ("RewardStd", curve.reward_std[i]),
            ("RewardMedian", curve.reward_median[i]),
        ] {
            rows.push(ReportRow {
                experiment: "variance".into(),
                beta: curve.beta,
                width_n: curve.width_n,
                trial: None,
                t: *t,
                metric: metric.into(),
                value: v,
            });
        }
    }
    rows
}

pub fn residual_rows(curve: &ResidualCurve, beta: f64, width_n: usize) -> Vec<ReportRow> {
    let metric = format!("ExpansionResidual{}", curve.order);
    let mut rows: Vec<ReportRow> = curve
        .times
        .iter()
        .zip(&curve.mean)
        .map(|(t, v)| ReportRow {
            experiment: "residual".into(),
            beta,
            width_n,
            trial: None,
            t: *t,
            metric: metric.clone(),
            value: *v,
        })
        .collect();
    let t_end = curve.times.last().copied().unwrap_or(0.0);
    for (i, v) in curve.per_trial.iter().enumerate() {
        rows.push(ReportRow {
            experiment: "residual".into(),
            beta,
            width_n,
            trial: Some(i),
            t: t_end,
            metric: format!("{metric}TimeMean"),
            value: *v,
        });
    }
    rows
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub slopes: BTreeMap<String, f64>,
    pub intercepts: BTreeMap<String, f64>,
    pub r_squared: BTreeMap<String, f64>,
    pub pass: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiments: Vec<ExperimentSummary>,
}

/// Summary of a rate sweep with the pass rule `|slope - expected| <= tol`
/// and `r^2 >= min_r2` for both tables.
pub fn rate_summary(sweep: &RateSweep, tol: f64, min_r2: f64) -> ExperimentSummary {
    let expected = (sweep.beta - 1.0).max(0.5 - sweep.beta);
    let mut s = ExperimentSummary { name: format!("rates_beta{}", sweep.beta), ..Default::default() };
    for (k, fit) in [("Q", &sweep.q), ("P", &sweep.p)] {
        s.slopes.insert(k.into(), fit.slope);
        s.intercepts.insert(k.into(), fit.intercept);
        s.r_squared.insert(k.into(), fit.r_squared);
        s.pass.insert(k.into(), (fit.slope - expected).abs() <= tol && fit.r_squared >= min_r2);
    }
    s
}

impl Summary {
    /// Merges every `*.summary.json` in `dir`, sorted by file name. Never
    /// recomputes anything.
    pub fn collect(dir: &Path) -> Result<Self> {
        let mut files: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".summary.json")))
            .collect();
        files.sort();
        let mut out = Summary::default();
        for f in files {
            let part: Summary = serde_json::from_str(&std::fs::read_to_string(&f)?)?;
            out.experiments.extend(part.experiments);
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
