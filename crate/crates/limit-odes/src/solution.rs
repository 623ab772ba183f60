use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use mdp_core::FiniteMdp;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ode::rk4_step;
use crate::softmax::MAX_TENSOR_ORDER;
use crate::system::{Model, Base};
use crate::{KernelTables, LimitError, Result};

/// Per-pair tables stored for every order, in CSV order.
pub const TABLE_KINDS: [&str; 6] = ["Q", "P", "f", "g", "pi", "sigma"];

const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitConfig {
    pub t_end: f64,
    #[serde(default = "default_h")]
    pub h_ode: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Needed for any order above 0.
    pub beta: Option<f64>,
    /// Highest order to integrate; defaults to the bracket order.
    pub max_order: Option<usize>,
    /// Draws one realisation of the Gaussian initial fluctuation.
    pub random_ic_seed: Option<u64>,
}

fn default_h() -> f64 {
    0.01
}

fn default_alpha() -> f64 {
    1.0
}

impl LimitConfig {
    pub fn new(t_end: f64, beta: Option<f64>) -> Self {
        LimitConfig { t_end, h_ode: default_h(), alpha: 1.0, beta, max_order: None, random_ic_seed: None }
    }
}

/// Smallest `n >= 1` with `beta <= (2n+1)/(2n+2)`.
pub fn expansion_order(beta: f64) -> Result<usize> {
    if !(beta > 0.5 && beta < 1.0) {
        return Err(LimitError::invalid("beta", "expansion needs 1/2 < beta < 1"));
    }
    let mut n = 1;
    while beta > bracket_end(n) + ENDPOINT_TOL {
        n += 1;
    }
    Ok(n)
}

fn bracket_end(n: usize) -> f64 {
    (2 * n + 1) as f64 / (2 * n + 2) as f64
}

/// `beta` sits on the upper end of its bracket, where the order-`n`
/// deterministic term and the fluctuation have the same size.
pub fn at_bracket_endpoint(beta: f64) -> bool {
    expansion_order(beta).map(|n| (beta - bracket_end(n)).abs() < ENDPOINT_TOL).unwrap_or(false)
}

/// Offsets into the flat ODE state.
struct Layout {
    s: usize,
    det: usize,
    terminal: bool,
    /// `fc[j-1][k]`: order-`j` coefficient of the critic measure applied to
    /// `k`-fold nested kernels, shape `[S, S, e_1..e_k]`.
    fc: Vec<Vec<(usize, usize)>>,
    fa: Vec<Vec<(usize, usize)>>,
    phi: usize,
    total: usize,
}

impl Layout {
    fn new(s: usize, det: usize, terminal: bool) -> Self {
        let mut off = 2 * (det + 1) * s;
        let mut block = || {
            (1..=det)
                .map(|j| {
                    (0..=det - j)
                        .map(|k| {
                            let len = s.pow(2 + k as u32);
                            off += len;
                            (off - len, len)
                        })
                        .collect()
                })
                .collect::<Vec<Vec<_>>>()
        };
        let fc = block();
        let fa = block();
        let phi = off;
        let total = off + if terminal { 4 * s * s } else { 0 };
        Layout { s, det, terminal, fc, fa, phi, total }
    }

    fn q<'y>(&self, y: &'y [f64], m: usize) -> &'y [f64] {
        &y[m * self.s..(m + 1) * self.s]
    }

    fn p<'y>(&self, y: &'y [f64], m: usize) -> &'y [f64] {
        let o = (self.det + 1 + m) * self.s;
        &y[o..o + self.s]
    }
}

/// Tables recorded at a grid point.
struct Frame {
    tables: [Vec<Vec<f64>>; 6],
}

struct System<'a> {
    model: Model<'a>,
    lay: Layout,
}

/// `out[i..] = sum_e t[i.., e] v[e]`.
fn contract_last(t: &[f64], v: &[f64], out: &mut [f64], rate: f64) {
    for (o, row) in out.iter_mut().zip(t.chunks_exact(v.len())) {
        *o += rate * row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

impl<'a> System<'a> {
    fn base(&self, t: f64, y: &[f64]) -> Result<Base> {
        let max_k = self.lay.det.max(self.lay.terminal as usize);
        self.model.base(t, self.lay.p(y, 0), max_k)
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64], frame: Option<&mut Frame>) -> Result<()> {
        let lay = &self.lay;
        let s = lay.s;
        let kern = self.model.kern;
        let base = self.base(t, y)?;
        let q: Vec<Vec<f64>> = (0..=lay.det).map(|m| lay.q(y, m).to_vec()).collect();
        let p: Vec<Vec<f64>> = (0..=lay.det).map(|m| lay.p(y, m).to_vec()).collect();
        let mut av: Vec<&[f64]> = vec![&kern.critic.kernel];
        let mut amu: Vec<&[f64]> = vec![&kern.actor.kernel];
        for j in 0..lay.det {
            let (o, l) = lay.fc[j][0];
            av.push(&y[o..o + l]);
            let (o, l) = lay.fa[j][0];
            amu.push(&y[o..o + l]);
        }
        let ex = self.model.expand(&base, &q, &p, &av, &amu);

        dy.iter_mut().for_each(|v| *v = 0.0);
        for m in 0..=lay.det {
            dy[m * s..(m + 1) * s].copy_from_slice(&ex.dq[m]);
            let o = (lay.det + 1 + m) * s;
            dy[o..o + s].copy_from_slice(&ex.dp[m]);
        }

        // measure coefficients move at relative rate e, so order j is driven
        // by order j-1 of (measure x weight)
        let nested = |table: &'a crate::LawTables, blocks: &[Vec<(usize, usize)>], j2: usize, k: usize| -> &[f64] {
            if j2 == 0 {
                &table.nested[k - 1]
            } else {
                let (o, l) = blocks[j2 - 1][k];
                &y[o..o + l]
            }
        };
        for j in 1..=lay.det {
            for k in 0..=lay.det - j {
                for j2 in 0..j {
                    let (o, l) = lay.fc[j - 1][k];
                    let src = nested(&kern.critic, &lay.fc, j2, k + 1);
                    contract_last(src, &ex.w[j - 1 - j2], &mut dy[o..o + l], self.model.alpha);
                    let (o, l) = lay.fa[j - 1][k];
                    let src = nested(&kern.actor, &lay.fa, j2, k + 1);
                    contract_last(src, &ex.u[j - 1 - j2], &mut dy[o..o + l], base.zeta);
                }
            }
        }

        if lay.terminal {
            let n = 2 * s;
            let l = DMatrix::from_row_slice(n, n, &self.model.linearization(&base, &q[0], &p[0]));
            let phi = DMatrix::from_row_slice(n, n, &y[lay.phi..lay.phi + n * n]);
            let d = l * phi;
            for i in 0..n {
                for c in 0..n {
                    dy[lay.phi + i * n + c] = d[(i, c)];
                }
            }
        }

        if let Some(fr) = frame {
            fr.tables = [q, p, ex.f, ex.g, ex.pi, ex.sigma];
        }
        Ok(())
    }

    /// Order-`n` entries of every table with the fluctuation `Phi ic` added
    /// to the deterministic order-`n` outputs.
    fn realized(&self, t: f64, y: &[f64], ic: &[f64], n: usize) -> Result<[Vec<f64>; 6]> {
        let lay = &self.lay;
        let s = lay.s;
        let n2 = 2 * s;
        let kern = self.model.kern;
        let phi = DMatrix::from_row_slice(n2, n2, &y[lay.phi..lay.phi + n2 * n2]);
        let shift = phi * DVector::from_column_slice(ic);
        let base = self.model.base(t, lay.p(y, 0), n)?;
        let mut q: Vec<Vec<f64>> = (0..n).map(|m| lay.q(y, m).to_vec()).collect();
        let mut p: Vec<Vec<f64>> = (0..n).map(|m| lay.p(y, m).to_vec()).collect();
        let (mut qn, mut pn) = if lay.det == n { (lay.q(y, n).to_vec(), lay.p(y, n).to_vec()) } else { (vec![0.0; s], vec![0.0; s]) };
        for i in 0..s {
            qn[i] += shift[i];
            pn[i] += shift[s + i];
        }
        q.push(qn);
        p.push(pn);
        let mut av: Vec<&[f64]> = vec![&kern.critic.kernel];
        let mut amu: Vec<&[f64]> = vec![&kern.actor.kernel];
        for j in 0..lay.det {
            let (o, l) = lay.fc[j][0];
            av.push(&y[o..o + l]);
            let (o, l) = lay.fa[j][0];
            amu.push(&y[o..o + l]);
        }
        let mut ex = self.model.expand(&base, &q, &p, &av, &amu);
        Ok([
            q.swap_remove(n),
            p.swap_remove(n),
            ex.f.swap_remove(n),
            ex.g.swap_remove(n),
            ex.pi.swap_remove(n),
            ex.sigma.swap_remove(n),
        ])
    }
}

/// Integrated limit tables on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSolution {
    pub n_states: usize,
    pub n_actions: usize,
    pub config: LimitConfig,
    pub times: Vec<f64>,
    /// Bracket order `n`, when `beta` is set.
    pub order_n: Option<usize>,
    /// Highest stored order.
    pub max_order: usize,
    /// Whether the Gaussian fluctuation at order `n` was integrated.
    pub terminal: bool,
    /// `tables[kind][order][time][pair]` in [`TABLE_KINDS`] order. With a
    /// fluctuation draw the order-`n` tables hold the realised term
    /// `X^(n) + Phi ic` and the derived tables computed from it.
    pub tables: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[order-1][time][S*S]` measure applied to the critic and actor kernels.
    pub measure_critic: Vec<Vec<Vec<f64>>>,
    pub measure_actor: Vec<Vec<Vec<f64>>>,
    /// `[time][(2S)^2]` fundamental matrix of the linearized output flow,
    /// acting on `(Q, P)`.
    pub fundamental: Vec<Vec<f64>>,
    /// Covariance of the rescaled initial outputs `(Q, P)`, `[(2S)^2]`.
    pub ic_cov: Vec<f64>,
    pub ic_sample: Option<Vec<f64>>,
}

/// Network outputs predicted by the expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub q_std: Vec<f64>,
    pub p_std: Vec<f64>,
}

fn kind_index(kind: &str) -> Result<usize> {
    TABLE_KINDS.iter().position(|k| *k == kind).ok_or_else(|| LimitError::invalid("kind", format!("unknown table `{kind}`")))
}

/// Symmetric square root draw `V sqrt(max(L, 0)) z`.
fn gaussian_sample(cov: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, cov));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let scaled = DVector::from_fn(n, |i, _| eig.eigenvalues[i].max(0.0).sqrt() * z[i]);
    (eig.eigenvectors * scaled).as_slice().to_vec()
}

fn interp(times: &[f64], series: &[Vec<f64>], t: f64) -> Vec<f64> {
    let last = times.len() - 1;
    if t <= times[0] || last == 0 {
        return series[0].clone();
    }
    if t >= times[last] {
        return series[last].clone();
    }
    let i = times.partition_point(|&v| v <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    series[i].iter().zip(&series[i + 1]).map(|(a, b)| a + w * (b - a)).collect()
}

pub fn integrate_limit(mdp: &FiniteMdp, kernels: &KernelTables, cfg: &LimitConfig) -> Result<LimitSolution> {
    if !(cfg.h_ode > 0.0) {
        return Err(LimitError::invalid("h_ode", "must be positive"));
    }
    if !(cfg.t_end >= 0.0) {
        return Err(LimitError::invalid("t_end", "must be non-negative"));
    }
    let ratio = cfg.t_end / cfg.h_ode;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-6 * ratio.max(1.0) {
        return Err(LimitError::invalid("t_end", "must be a multiple of h_ode"));
    }
    let steps = steps as usize;
    if kernels.n_pairs != mdp.n_pairs() {
        return Err(LimitError::invalid("kernels", "built for a different pair count"));
    }

    let (order_n, target, det, terminal) = match cfg.beta {
        None => {
            if cfg.max_order.unwrap_or(0) > 0 {
                return Err(LimitError::invalid("beta", "required for corrections"));
            }
            (None, 0, 0, false)
        }
        Some(beta) => {
            let n = expansion_order(beta)?;
            let target = cfg.max_order.unwrap_or(n);
            if target > n {
                return Err(LimitError::OrderExceedsBracket);
            }
            if target < n {
                (Some(n), target, target, false)
            } else {
                (Some(n), n, n - 1 + at_bracket_endpoint(beta) as usize, true)
            }
        }
    };
    // the realised terminal order needs tensors up to n
    let tensor_order = if terminal { target } else { det };
    if tensor_order > MAX_TENSOR_ORDER {
        return Err(LimitError::UnsupportedOrder(tensor_order));
    }
    if det > kernels.spec.depth {
        return Err(LimitError::invalid("depth", format!("order {det} needs nested kernels of depth {det}")));
    }

    let s = mdp.n_pairs();
    let n2 = 2 * s;
    let mut ic_cov = vec![0.0; n2 * n2];
    for i in 0..s {
        for j in 0..s {
            ic_cov[i * n2 + j] = kernels.critic.ic_cov[i * s + j];
            ic_cov[(s + i) * n2 + s + j] = kernels.actor.ic_cov[i * s + j];
        }
    }
    let ic_sample = match (terminal, cfg.random_ic_seed) {
        (true, Some(seed)) => Some(gaussian_sample(&ic_cov, n2, seed)),
        _ => None,
    };
    let sys = System { model: Model::new(mdp, kernels, cfg.alpha), lay: Layout::new(s, det, terminal) };
    let lay = &sys.lay;
    let mut y = vec![0.0; lay.total];
    if terminal {
        for i in 0..2 * s {
            y[lay.phi + i * 2 * s + i] = 1.0;
        }
    }

    let mut tables = vec![vec![Vec::with_capacity(steps + 1); target + 1]; 6];
    let mut measure_critic = vec![Vec::with_capacity(steps + 1); det];
    let mut measure_actor = vec![Vec::with_capacity(steps + 1); det];
    let mut fundamental = Vec::new();
    let mut times = Vec::with_capacity(steps + 1);
    let mut frame = Frame { tables: Default::default() };
    for i in 0..=steps {
        let t = i as f64 * cfg.h_ode;
        let mut k1 = vec![0.0; lay.total];
        sys.eval(t, &y, &mut k1, Some(&mut frame))?;
        times.push(t);
        for (dst, src) in tables.iter_mut().zip(frame.tables.iter_mut()) {
            for (m, d) in dst.iter_mut().enumerate() {
                d.push(src.get_mut(m).map(std::mem::take).unwrap_or_else(|| vec![0.0; s]));
            }
        }
        for j in 0..det {
            let (o, l) = lay.fc[j][0];
            measure_critic[j].push(y[o..o + l].to_vec());
            let (o, l) = lay.fa[j][0];
            measure_actor[j].push(y[o..o + l].to_vec());
        }
        if terminal {
            fundamental.push(y[lay.phi..].to_vec());
            if let Some(ic) = &ic_sample {
                for (k, v) in sys.realized(t, &y, ic, target)?.into_iter().enumerate() {
                    tables[k][target][i] = v;
                }
            }
        }
        if i < steps {
            rk4_step(&mut |t, y: &[f64], d: &mut [f64]| sys.eval(t, y, d, None), t, &mut y, cfg.h_ode, Some(k1))?;
        }
    }


    Ok(LimitSolution {
        n_states: mdp.n_states(),
        n_actions: mdp.n_actions(),
        config: cfg.clone(),
        times,
        order_n,
        max_order: target,
        terminal,
        tables,
        measure_critic,
        measure_actor,
        fundamental,
        ic_cov,
        ic_sample,
    })
}

/// Order-0 limit only.
pub fn integrate_order0(mdp: &FiniteMdp, kernels: &KernelTables, t_end: f64, h_ode: f64) -> Result<LimitSolution> {
    let cfg = LimitConfig { h_ode, ..LimitConfig::new(t_end, None) };
    integrate_limit(mdp, kernels, &cfg)
}

/// Re-integrates the joint system of `sol` up to order `m`; the lower
/// orders are recomputed alongside since every order feeds the next.
pub fn integrate_correction(m: usize, sol: &LimitSolution, mdp: &FiniteMdp, kernels: &KernelTables) -> Result<LimitSolution> {
    let beta = sol.config.beta.ok_or_else(|| LimitError::invalid("beta", "required for corrections"))?;
    if m > expansion_order(beta)? {
        return Err(LimitError::OrderExceedsBracket);
    }
    let cfg = LimitConfig { max_order: Some(m), ..sol.config.clone() };
    integrate_limit(mdp, kernels, &cfg)
}

/// Expansion prediction of the width-`width_n` network outputs at `t` with
/// the stored tables, including the fluctuation draw when there is one.
pub fn predict_network(sol: &LimitSolution, width_n: usize, t: f64) -> Prediction {
    sol.predict_network(width_n, t, None)
}

impl LimitSolution {
    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    /// `[order][time][pair]` table of one kind.
    pub fn table(&self, kind: &str) -> Result<&[Vec<Vec<f64>>]> {
        Ok(&self.tables[kind_index(kind)?])
    }

    /// Linearly interpolated order-`m` table at `t`.
    pub fn at(&self, kind: &str, m: usize, t: f64) -> Result<Vec<f64>> {
        let tab = self.table(kind)?;
        let series = tab.get(m).ok_or_else(|| LimitError::invalid("order", format!("order {m} not stored")))?;
        Ok(interp(&self.times, series, t))
    }

    pub fn fundamental_at(&self, t: f64) -> Option<Vec<f64>> {
        self.terminal.then(|| interp(&self.times, &self.fundamental, t))
    }

    /// `sum_{m<n} e^m X^(m) + N^(1/2-beta) X^(n)` with `e = N^(beta-1)`;
    /// below the bracket order only the stored orders are summed. `ic`
    /// replaces the stored fluctuation draw (pass zeros for the mean); the
    /// std is that of the Gaussian term.
    pub fn predict_network(&self, width_n: usize, t: f64, ic: Option<&[f64]>) -> Prediction {
        let s = self.n_pairs();
        let n2 = 2 * s;
        let n_f = width_n as f64;
        let beta = self.config.beta.unwrap_or(1.0);
        let eps = n_f.powf(beta - 1.0);
        let fluct = n_f.powf(0.5 - beta);
        let mut out = [vec![0.0; s], vec![0.0; s]];
        for (kind, o) in out.iter_mut().enumerate() {
            for m in 0..=self.max_order {
                let w = if self.terminal && Some(m) == self.order_n { fluct } else { eps.powi(m as i32) };
                for (v, x) in o.iter_mut().zip(interp(&self.times, &self.tables[kind][m], t)) {
                    *v += w * x;
                }
            }
        }
        let mut std = [vec![0.0; s], vec![0.0; s]];
        if let Some(phi) = self.fundamental_at(t) {
            let phi = DMatrix::from_row_slice(n2, n2, &phi);
            if let Some(ic) = ic {
                let mut delta = DVector::from_column_slice(ic);
                if let Some(stored) = &self.ic_sample {
                    delta -= DVector::from_column_slice(stored);
                }
                let shift = &phi * delta;
                for i in 0..n2 {
                    out[i / s][i % s] += fluct * shift[i];
                }
            }
            let cov = &phi * DMatrix::from_row_slice(n2, n2, &self.ic_cov) * phi.transpose();
            for i in 0..n2 {
                std[i / s][i % s] = fluct * cov[(i, i)].max(0.0).sqrt();
            }
        }
        let [q, p] = out;
        let [q_std, p_std] = std;
        Prediction { q, p, q_std, p_std }
    }

    /// Long-format rows `t,order,kind,x,a,value` every `stride` grid points.
    /// Measure tables use kinds `v`/`mu` with `x`, `a` the two pair indices;
    /// the fundamental matrix uses kind `Phi` with row and column.
    pub fn to_csv(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let na = self.n_actions;
        let s = self.n_pairs();
        let mut out = String::from("t,order,kind,x,a,value\n");
        let last = self.times.len() - 1;
        for (i, t) in self.times.iter().enumerate() {
            if i % stride != 0 && i != last {
                continue;
            }
            for (kind, tab) in TABLE_KINDS.iter().zip(&self.tables) {
                for (m, series) in tab.iter().enumerate() {
                    for (pair, v) in series[i].iter().enumerate() {
                        let _ = writeln!(out, "{t},{m},{kind},{},{},{v}", pair / na, pair % na);
                    }
                }
            }
            for (kind, tab) in [("v", &self.measure_critic), ("mu", &self.measure_actor)] {
                for (j, series) in tab.iter().enumerate() {
                    for (idx, v) in series[i].iter().enumerate() {
                        let _ = writeln!(out, "{t},{},{kind},{},{},{v}", j + 1, idx / s, idx % s);
                    }
                }
            }
            if self.terminal {
                let n2 = 2 * s;
                for (idx, v) in self.fundamental[i].iter().enumerate() {
                    let _ = writeln!(out, "{t},{},Phi,{},{},{v}", self.max_order, idx / n2, idx % n2);
                }
            }
        }
        out
    }

    /// Writes `<stem>.csv` and the metadata `<stem>.json` needed to read it back.
    pub fn write(&self, dir: &Path, stem: &str, stride: usize) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.csv")), self.to_csv(stride))?;
        let meta = LimitSolution {
            times: Vec::new(),
            tables: Vec::new(),
            measure_critic: Vec::new(),
            measure_actor: Vec::new(),
            fundamental: Vec::new(),
            ..self.clone()
        };
        let json = serde_json::to_string_pretty(&meta).map_err(|e| LimitError::invalid("json", e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.json")), json)?;
        Ok(())
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let meta = std::fs::read_to_string(dir.join(format!("{stem}.json")))?;
        let meta: LimitSolution = serde_json::from_str(&meta).map_err(|e| LimitError::invalid("json", e.to_string()))?;
        let csv = std::fs::read_to_string(dir.join(format!("{stem}.csv")))?;
        Self::from_csv(meta, &csv)
    }

    /// Fills the tables of `meta` from rows produced by [`Self::to_csv`].
    pub fn from_csv(mut meta: LimitSolution, text: &str) -> Result<Self> {
        let bad = |line: usize, why: &str| LimitError::invalid("csv", format!("line {}: {why}", line + 1));
        let s = meta.n_pairs();
        let n2 = 2 * s;
        let det = meta.measure_len();
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(bad(ln, "expected 6 columns"));
            }
            let t: f64 = cols[0].parse().map_err(|_| bad(ln, "bad t"))?;
            let m: usize = cols[1].parse().map_err(|_| bad(ln, "bad order"))?;
            let x: usize = cols[3].parse().map_err(|_| bad(ln, "bad x"))?;
            let a: usize = cols[4].parse().map_err(|_| bad(ln, "bad a"))?;
            let v: f64 = cols[5].parse().map_err(|_| bad(ln, "bad value"))?;
            let ti = *index.entry(t.to_bits()).or_insert_with(|| {
                times.push(t);
                times.len() - 1
            });
            rows.push((ln, ti, m, cols[2].to_string(), x, a, v));
        }
        let nt = times.len();
        meta.tables = vec![vec![vec![vec![0.0; s]; nt]; meta.max_order + 1]; 6];
        meta.measure_critic = vec![vec![vec![0.0; s * s]; nt]; det];
        meta.measure_actor = vec![vec![vec![0.0; s * s]; nt]; det];
        meta.fundamental = if meta.terminal { vec![vec![0.0; n2 * n2]; nt] } else { Vec::new() };
        for (ln, ti, m, kind, x, a, v) in rows {
            let slot = match kind.as_str() {
                "v" | "mu" => {
                    let tab = if kind == "v" { &mut meta.measure_critic } else { &mut meta.measure_actor };
                    (m >= 1 && m <= det && x < s && a < s).then(|| &mut tab[m - 1][ti][x * s + a])
                }
                "Phi" => (meta.terminal && x < n2 && a < n2).then(|| &mut meta.fundamental[ti][x * n2 + a]),
                k => {
                    let ki = kind_index(k)?;
                    (m <= meta.max_order && x < meta.n_states && a < meta.n_actions)
                        .then(|| &mut meta.tables[ki][m][ti][x * meta.n_actions + a])
                }
            };
            *slot.ok_or_else(|| bad(ln, "index out of range"))? = v;
        }
        meta.times = times;
        Ok(meta)
    }

    /// Number of stored measure orders.
    fn measure_len(&self) -> usize {
        match self.order_n {
            Some(n) if self.terminal => {
                n - 1 + self.config.beta.is_some_and(at_bracket_endpoint) as usize
            }
            Some(_) => self.max_order,
            None => 0,
        }
    }
}
