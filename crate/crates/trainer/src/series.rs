use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Table kinds in snapshot CSVs.
pub const KINDS: [&str; 4] = ["Q", "P", "f", "g"];

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed snapshot csv line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Time-rescaled snapshots `t = k / N` of the four pair tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSeries {
    pub n_states: usize,
    pub n_actions: usize,
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
}

impl SnapshotSeries {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        SnapshotSeries { n_states, n_actions, times: vec![], q: vec![], p: vec![], f: vec![], g: vec![] }
    }

    pub fn push(&mut self, t: f64, q: Vec<f64>, p: Vec<f64>, f: Vec<f64>, g: Vec<f64>) {
        self.times.push(t);
        self.q.push(q);
        self.p.push(p);
        self.f.push(f);
        self.g.push(g);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn kind(&self, kind: &str) -> &[Vec<f64>] {
        match kind {
            "Q" => &self.q,
            "P" => &self.p,
            "f" => &self.f,
            "g" => &self.g,
            _ => panic!("unknown table kind {kind}"),
        }
    }

    /// Long-format CSV `t,kind,x,a,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,kind,x,a,value\n");
        for (i, t) in self.times.iter().enumerate() {
            for kind in KINDS {
                for (pair, v) in self.kind(kind)[i].iter().enumerate() {
                    let (x, a) = (pair / self.n_actions, pair % self.n_actions);
                    writeln!(out, "{t},{kind},{x},{a},{v}").unwrap();
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, SeriesError> {
        let mut rows = Vec::new();
        let (mut ns, mut na) = (0, 0);
        for (line, l) in text.lines().enumerate().skip(1) {
            if l.trim().is_empty() {
                continue;
            }
            let bad = |reason: &str| SeriesError::Parse { line: line + 1, reason: reason.into() };
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 5 {
                return Err(bad("expected 5 columns"));
            }
            let t: f64 = cols[0].parse().map_err(|_| bad("t"))?;
            let kind = KINDS.iter().position(|k| *k == cols[1]).ok_or_else(|| bad("kind"))?;
            let x: usize = cols[2].parse().map_err(|_| bad("x"))?;
            let a: usize = cols[3].parse().map_err(|_| bad("a"))?;
            let v: f64 = cols[4].parse().map_err(|_| bad("value"))?;
            ns = ns.max(x + 1);
            na = na.max(a + 1);
            rows.push((t, kind, x, a, v));
        }
        let mut s = SnapshotSeries::new(ns, na);
        let np = ns * na;
        for (t, kind, x, a, v) in rows {
            if s.times.last() != Some(&t) {
                s.push(t, vec![0.0; np], vec![0.0; np], vec![0.0; np], vec![0.0; np]);
            }
            let i = s.times.len() - 1;
            let table = match kind {
                0 => &mut s.q[i],
                1 => &mut s.p[i],
                2 => &mut s.f[i],
                _ => &mut s.g[i],
            };
            table[x * na + a] = v;
        }
        Ok(s)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), SeriesError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, SeriesError> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Sidecar JSON for every persisted run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    pub wall_time_secs: f64,
    pub version: String,
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn new(config: serde_json::Value, seed: u64, wall_time_secs: f64) -> Self {
        let canonical = serde_json::to_string(&config).expect("json value serializes");
        RunManifest {
            config_hash: mdp_core::seed::digest_hex(canonical.as_bytes()),
            seed,
            wall_time_secs,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("manifest serializes"))
    }
}
