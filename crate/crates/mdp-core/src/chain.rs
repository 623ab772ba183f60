use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::{FiniteMdp, MdpError, Policy, Result};

/// Which transition kernel drives a sampling chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    /// `p(x'|x,a)`.
    Standard,
    /// `gamma p(x'|x,a) + (1 - gamma) rho0(x')`, restarting from the initial law.
    Auxiliary,
}

/// Dense `[n_pairs x n_states]` transition table for one chain kind.
#[derive(Debug, Clone)]
pub struct Kernel {
    n_states: usize,
    probs: Vec<f64>,
}

impl Kernel {
    pub fn row(&self, pair: usize) -> &[f64] {
        &self.probs[pair * self.n_states..(pair + 1) * self.n_states]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }
}

pub fn kernel(mdp: &FiniteMdp, kind: ChainKind) -> Kernel {
    let n = mdp.n_states();
    let probs = match kind {
        ChainKind::Standard => mdp.transitions().to_vec(),
        ChainKind::Auxiliary => {
            let g = mdp.gamma();
            let rho = mdp.rho0_states();
            let mut out = Vec::with_capacity(mdp.transitions().len());
            for row in mdp.transitions().chunks(n) {
                out.extend(row.iter().zip(&rho).map(|(p, r)| g * p + (1.0 - g) * r));
            }
            out
        }
    };
    Kernel { n_states: n, probs }
}

/// Inverse-CDF draw from a discrete distribution. Consumes one uniform.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding slack; take the last index with mass
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// One transition of a sampling chain: `x' ~ kernel(.|pair)`, then `a' ~ policy(x', .)`.
pub fn step<R: Rng + ?Sized>(mdp: &FiniteMdp, kind: ChainKind, policy: &Policy, current: usize, rng: &mut R) -> usize {
    let row = mdp.transition_row(current);
    let x = match kind {
        ChainKind::Standard => sample_index(row, rng),
        ChainKind::Auxiliary => {
            let g = mdp.gamma();
            let rho = mdp.rho0_states();
            let mixed: Vec<f64> = row.iter().zip(&rho).map(|(p, r)| g * p + (1.0 - g) * r).collect();
            sample_index(&mixed, rng)
        }
    };
    let a = sample_index(policy.row(x), rng);
    mdp.pair(x, a)
}

/// Pair-level transition matrix `M[(x,a),(x',a')] = kernel(x'|x,a) policy(x',a')`.
pub fn pair_transition(mdp: &FiniteMdp, kind: ChainKind, policy: &Policy) -> DMatrix<f64> {
    let k = kernel(mdp, kind);
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let np = ns * na;
    DMatrix::from_fn(np, np, |i, j| {
        let (x, a) = (j / na, j % na);
        k.row(i)[x] * policy.prob(x, a)
    })
}

pub fn stationary_distribution(mdp: &FiniteMdp, kind: ChainKind, policy: &Policy) -> Result<Vec<f64>> {
    let m = pair_transition(mdp, kind, policy);
    Ok(StationarySolver::new(&m)?.stationary().as_slice().to_vec())
}

/// Stationary law of a row-stochastic matrix together with an LU factor of
/// `(I - M + W)^T`, `W` the matrix whose rows all equal the stationary law.
/// The factor solves the row systems `y (I - M + W) = b` used by the
/// perturbation expansion.
#[derive(Debug, Clone)]
pub struct StationarySolver {
    pi: DVector<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

const PIVOT_TOL: f64 = 1e-12;

fn checked_lu(a: DMatrix<f64>) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let lu = a.lu();
    let u = lu.u();
    let d = u.diagonal();
    let max = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = d.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(max > 0.0) || min <= PIVOT_TOL * max {
        return Err(MdpError::NotErgodic);
    }
    Ok(lu)
}

impl StationarySolver {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        let inv_n = 1.0 / n as f64;
        // (I - M^T + 1 1^T / n) y = 1 / n
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - m[(j, i)] + inv_n);
        let lu = checked_lu(a)?;
        let mut y = lu.solve(&DVector::from_element(n, inv_n)).ok_or(MdpError::NotErgodic)?;
        let s = y.sum();
        if !s.is_finite() || s.abs() < PIVOT_TOL {
            return Err(MdpError::NotErgodic);
        }
        y /= s;
        for v in y.iter_mut() {
            if *v < 0.0 {
                if *v < -1e-9 {
                    return Err(MdpError::NotErgodic);
                }
                *v = 0.0;
            }
        }
        let s = y.sum();
        y /= s;
        let k = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - m[(j, i)] + y[i]);
        let lu = checked_lu(k)?;
        Ok(StationarySolver { pi: y, lu })
    }

    pub fn stationary(&self) -> &DVector<f64> {
        &self.pi
    }

    /// Solves the row system `y (I - M + W) = b`.
    pub fn solve_row(&self, b: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_column_slice(b);
        self.lu.solve(&rhs).expect("factor checked at construction").as_slice().to_vec()
    }
}
