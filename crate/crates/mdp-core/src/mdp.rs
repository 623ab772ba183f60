use serde::{Deserialize, Serialize};

use crate::{MdpError, Result};

const SUM_TOL: f64 = 1e-12;

/// A finite discounted MDP with embedded state-action inputs.
///
/// Pairs `(x, a)` are indexed row-major as `x * n_actions + a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMdp", into = "RawMdp")]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    reward: Vec<f64>,
    transition: Vec<f64>,
    rho0: Vec<f64>,
    state_embed: Vec<f64>,
    action_embed: Vec<f64>,
    state_dim: usize,
    action_dim: usize,
    inputs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMdp {
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    reward: Vec<f64>,
    transition: Vec<f64>,
    rho0: Vec<f64>,
    state_embed: Vec<f64>,
    action_embed: Vec<f64>,
}

impl TryFrom<RawMdp> for FiniteMdp {
    type Error = MdpError;

    fn try_from(r: RawMdp) -> Result<Self> {
        FiniteMdp::new(
            r.n_states,
            r.n_actions,
            r.gamma,
            r.reward,
            r.transition,
            r.rho0,
            r.state_embed,
            r.action_embed,
        )
    }
}

impl From<FiniteMdp> for RawMdp {
    fn from(m: FiniteMdp) -> Self {
        RawMdp {
            n_states: m.n_states,
            n_actions: m.n_actions,
            gamma: m.gamma,
            reward: m.reward,
            transition: m.transition,
            rho0: m.rho0,
            state_embed: m.state_embed,
            action_embed: m.action_embed,
        }
    }
}

fn check_simplex(field: &'static str, v: &[f64]) -> Result<()> {
    if v.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(MdpError::invalid(field, "entries must be finite and nonnegative"));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return Err(MdpError::invalid(field, format!("sums to {s}, expected 1")));
    }
    Ok(())
}

impl FiniteMdp {
    /// Validating constructor. Embedding widths are inferred from the flat
    /// embedding lengths.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_states: usize,
        n_actions: usize,
        gamma: f64,
        reward: Vec<f64>,
        transition: Vec<f64>,
        rho0: Vec<f64>,
        state_embed: Vec<f64>,
        action_embed: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 {
            return Err(MdpError::invalid("n_states", "must be positive"));
        }
        if n_actions == 0 {
            return Err(MdpError::invalid("n_actions", "must be positive"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(MdpError::invalid("gamma", format!("{gamma} not in (0,1)")));
        }
        let np = n_states * n_actions;
        if reward.len() != np {
            return Err(MdpError::invalid("reward", format!("length {} != {np}", reward.len())));
        }
        if reward.iter().any(|r| !r.is_finite() || r.abs() > 1.0) {
            return Err(MdpError::invalid("reward", "entries must lie in [-1, 1]"));
        }
        if transition.len() != np * n_states {
            return Err(MdpError::invalid(
                "transition",
                format!("length {} != {}", transition.len(), np * n_states),
            ));
        }
        for row in transition.chunks(n_states) {
            check_simplex("transition", row)?;
        }
        if rho0.len() != np {
            return Err(MdpError::invalid("rho0", format!("length {} != {np}", rho0.len())));
        }
        check_simplex("rho0", &rho0)?;
        if state_embed.is_empty() || state_embed.len() % n_states != 0 {
            return Err(MdpError::invalid("state_embed", "length must be a positive multiple of n_states"));
        }
        if action_embed.is_empty() || action_embed.len() % n_actions != 0 {
            return Err(MdpError::invalid("action_embed", "length must be a positive multiple of n_actions"));
        }
        if state_embed.iter().chain(&action_embed).any(|v| !v.is_finite()) {
            return Err(MdpError::invalid("state_embed", "entries must be finite"));
        }
        let state_dim = state_embed.len() / n_states;
        let action_dim = action_embed.len() / n_actions;
        let d = state_dim + action_dim;
        let mut inputs = Vec::with_capacity(np * d);
        for x in 0..n_states {
            for a in 0..n_actions {
                inputs.extend_from_slice(&state_embed[x * state_dim..(x + 1) * state_dim]);
                inputs.extend_from_slice(&action_embed[a * action_dim..(a + 1) * action_dim]);
            }
        }
        Ok(FiniteMdp {
            n_states,
            n_actions,
            gamma,
            reward,
            transition,
            rho0,
            state_embed,
            action_embed,
            state_dim,
            action_dim,
            inputs,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn pair(&self, x: usize, a: usize) -> usize {
        x * self.n_actions + a
    }

    /// Inverse of [`FiniteMdp::pair`].
    pub fn split(&self, pair: usize) -> (usize, usize) {
        (pair / self.n_actions, pair % self.n_actions)
    }

    pub fn reward(&self, pair: usize) -> f64 {
        self.reward[pair]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    /// `p(.|x,a)` as a slice over next states.
    pub fn transition_row(&self, pair: usize) -> &[f64] {
        &self.transition[pair * self.n_states..(pair + 1) * self.n_states]
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transition
    }

    pub fn rho0(&self) -> &[f64] {
        &self.rho0
    }

    /// State marginal of `rho0`.
    pub fn rho0_states(&self) -> Vec<f64> {
        self.rho0.chunks(self.n_actions).map(|r| r.iter().sum()).collect()
    }

    /// Input dimension `d_x + d_a`.
    pub fn input_dim(&self) -> usize {
        self.state_dim + self.action_dim
    }

    /// Embedded input of a pair.
    pub fn input(&self, pair: usize) -> &[f64] {
        let d = self.input_dim();
        &self.inputs[pair * d..(pair + 1) * d]
    }

    /// All embedded inputs, row-major `[n_pairs x input_dim]`.
    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        FiniteMdp::new(
            self.n_states,
            self.n_actions,
            gamma,
            self.reward,
            self.transition,
            self.rho0,
            self.state_embed,
            self.action_embed,
        )
    }

    pub fn with_rho0(self, rho0: Vec<f64>) -> Result<Self> {
        FiniteMdp::new(
            self.n_states,
            self.n_actions,
            self.gamma,
            self.reward,
            self.transition,
            rho0,
            self.state_embed,
            self.action_embed,
        )
    }

    pub fn with_embeddings(self, state_embed: Vec<f64>, action_embed: Vec<f64>) -> Result<Self> {
        FiniteMdp::new(
            self.n_states,
            self.n_actions,
            self.gamma,
            self.reward,
            self.transition,
            self.rho0,
            state_embed,
            action_embed,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mdp serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
