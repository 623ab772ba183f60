use nalgebra::{DMatrix, DVector};

use crate::{FiniteMdp, Policy};

/// `V^f` over pairs from the linear Bellman system `(I - gamma M_f) V = r`.
pub fn value_function(mdp: &FiniteMdp, policy: &Policy) -> Vec<f64> {
    let np = mdp.n_pairs();
    let na = mdp.n_actions();
    let g = mdp.gamma();
    let a = DMatrix::from_fn(np, np, |i, j| {
        let (x, b) = (j / na, j % na);
        let m = mdp.transition_row(i)[x] * policy.prob(x, b);
        if i == j { 1.0 - g * m } else { -g * m }
    });
    let r = DVector::from_column_slice(mdp.rewards());
    // gamma < 1 makes I - gamma M_f strictly diagonally dominant
    a.lu().solve(&r).expect("Bellman system is nonsingular").as_slice().to_vec()
}

/// Greedy policy from value iteration on the state-action optimality
/// operator, iterated to a sup-norm change below 1e-12. Ties go to the
/// lowest action index.
pub fn optimal_policy(mdp: &FiniteMdp) -> Policy {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let g = mdp.gamma();
    let mut q = vec![0.0; ns * na];
    let mut v = vec![0.0; ns];
    loop {
        for (x, vx) in v.iter_mut().enumerate() {
            *vx = q[x * na..(x + 1) * na].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        }
        let mut delta = 0.0f64;
        for (i, qi) in q.iter_mut().enumerate() {
            let next: f64 = mdp.transition_row(i).iter().zip(&v).map(|(p, vx)| p * vx).sum();
            let new = mdp.reward(i) + g * next;
            delta = delta.max((new - *qi).abs());
            *qi = new;
        }
        if delta < 1e-12 {
            break;
        }
    }
    let actions: Vec<usize> = (0..ns)
        .map(|x| {
            let row = &q[x * na..(x + 1) * na];
            let best = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.iter().position(|&v| v >= best - 1e-10).unwrap()
        })
        .collect();
    Policy::deterministic(na, &actions)
}

/// `J(f) = sum rho0(x,a) V^f(x,a)`.
pub fn expected_reward(mdp: &FiniteMdp, policy: &Policy) -> f64 {
    value_function(mdp, policy).iter().zip(mdp.rho0()).map(|(v, r)| v * r).sum()
}
