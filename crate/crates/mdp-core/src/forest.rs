use crate::{FiniteMdp, MdpError, Result};

/// How state and action indices are mapped to network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Embedding {
    /// One-hot state followed by one-hot action.
    #[default]
    OneHot,
    /// Scalars `x / n_states` and `a / n_actions`.
    IndexScalar,
}

impl Embedding {
    /// Flat `(state_embed, action_embed)` matrices.
    pub fn matrices(self, n_states: usize, n_actions: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            Embedding::OneHot => (one_hot(n_states), one_hot(n_actions)),
            Embedding::IndexScalar => (
                (0..n_states).map(|i| i as f64 / n_states as f64).collect(),
                (0..n_actions).map(|j| j as f64 / n_actions as f64).collect(),
            ),
        }
    }
}

fn one_hot(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// Forest-management MDP with the usual toolbox tables, rewards divided by
/// their largest magnitude. Action 0 waits, action 1 cuts. Discount 0.7,
/// uniform `rho0` and one-hot embeddings; override with the `with_*` methods.
pub fn build_forest(n_states: usize, r_wait_top: f64, r_cut_top: f64, p_fire: f64) -> Result<FiniteMdp> {
    if n_states < 2 {
        return Err(MdpError::invalid("n_states", "forest needs at least 2 states"));
    }
    if !(p_fire > 0.0 && p_fire < 1.0) {
        return Err(MdpError::invalid("p_fire", format!("{p_fire} not in (0,1)")));
    }
    if !r_wait_top.is_finite() || !r_cut_top.is_finite() {
        return Err(MdpError::invalid("reward", "top rewards must be finite"));
    }
    let s = n_states;
    let mut transition = vec![0.0; s * 2 * s];
    let mut reward = vec![0.0; s * 2];
    for x in 0..s {
        let wait = &mut transition[(x * 2) * s..(x * 2 + 1) * s];
        wait[0] += p_fire;
        wait[(x + 1).min(s - 1)] += 1.0 - p_fire;
        transition[(x * 2 + 1) * s] = 1.0;
        reward[x * 2 + 1] = 1.0;
    }
    reward[1] = 0.0;
    reward[(s - 1) * 2] = r_wait_top;
    reward[(s - 1) * 2 + 1] = r_cut_top;
    let scale = reward.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if scale > 0.0 {
        for r in &mut reward {
            *r /= scale;
        }
    }
    let (se, ae) = Embedding::OneHot.matrices(s, 2);
    FiniteMdp::new(s, 2, 0.7, reward, transition, vec![1.0 / (2 * s) as f64; 2 * s], se, ae)
}
