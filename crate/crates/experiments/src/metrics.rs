use mdp_core::{expected_reward, stationary_distribution, value_function, ChainKind, FiniteMdp, MdpError, Policy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricTag {
    ActorMSE,
    Reward,
    QError,
    PError,
    ExpansionResidual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub tag: MetricTag,
    pub value: f64,
    pub t: f64,
    pub beta: f64,
    pub width_n: usize,
    pub trial: usize,
}

/// Mean over all pairs of `(f - pistar)^2`.
pub fn actor_mse(f: &Policy, pistar: &Policy) -> f64 {
    let (a, b) = (f.probs(), pistar.probs());
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64
}

/// Discounted reward of `f` from `rho0`.
pub fn policy_reward(mdp: &FiniteMdp, f: &Policy) -> f64 {
    expected_reward(mdp, f)
}

/// Policy from a flat softmax table; renormalizes rounding drift.
pub fn policy_from_table(mdp: &FiniteMdp, f: &[f64]) -> Policy {
    let na = mdp.n_actions();
    let probs = f
        .chunks(na)
        .flat_map(|row| {
            let s: f64 = row.iter().sum();
            row.iter().map(move |v| v / s)
        })
        .collect();
    Policy::new(mdp.n_states(), na, probs).expect("softmax rows are distributions")
}

/// `max |Q - V^f|` over pairs.
pub fn bellman_gap(mdp: &FiniteMdp, q: &[f64], f: &Policy) -> f64 {
    value_function(mdp, f).iter().zip(q).map(|(v, x)| (v - x).abs()).fold(0.0, f64::max)
}

/// Euclidean norm of `sigma^f(x,a) (V^f(x,a) - V^f(x))`, the gradient of the
/// discounted reward with respect to the softmax logits.
pub fn policy_gradient_norm(mdp: &FiniteMdp, f: &Policy) -> Result<f64, MdpError> {
    let na = mdp.n_actions();
    let v = value_function(mdp, f);
    let sigma = stationary_distribution(mdp, ChainKind::Auxiliary, f)?;
    let mut total = 0.0;
    for (x, row) in v.chunks(na).enumerate() {
        let vx: f64 = row.iter().zip(f.row(x)).map(|(a, b)| a * b).sum();
        for (a, va) in row.iter().enumerate() {
            total += (sigma[x * na + a] * (va - vx)).powi(2);
        }
    }
    Ok(total.sqrt())
}
