use mdp_core::Policy;

/// Learning rates and exploration rate of the width-`N` algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub alpha_const: f64,
    pub width_n: usize,
    pub beta: f64,
}

impl Schedule {
    pub fn new(alpha_const: f64, width_n: usize, beta: f64) -> Self {
        Schedule { alpha_const, width_n, beta }
    }

    fn n(&self) -> f64 {
        self.width_n as f64
    }

    /// `alpha N^{2 beta - 2}`.
    pub fn alpha(&self, _k: u64) -> f64 {
        self.alpha_const * self.n().powf(2.0 * self.beta - 2.0)
    }

    /// `N^{2 beta - 2} / (1 + k/N)`.
    pub fn zeta(&self, k: u64) -> f64 {
        self.n().powf(2.0 * self.beta - 2.0) / (1.0 + k as f64 / self.n())
    }

    /// `1 / (1 + ln^2(1 + k/N))`.
    pub fn eta(&self, k: u64) -> f64 {
        eta_limit(k as f64 / self.n())
    }
}

pub fn zeta_limit(t: f64) -> f64 {
    1.0 / (1.0 + t)
}

pub fn eta_limit(t: f64) -> f64 {
    let l = (1.0 + t).ln();
    1.0 / (1.0 + l * l)
}

/// `g = eta / |A| + (1 - eta) f`.
pub fn exploration_policy(f: &Policy, eta: f64) -> Policy {
    let na = f.n_actions();
    let u = eta / na as f64;
    let probs = f.probs().iter().map(|p| u + (1.0 - eta) * p).collect();
    renormalized(f.n_states(), na, probs)
}

fn renormalized(ns: usize, na: usize, mut probs: Vec<f64>) -> Policy {
    for row in probs.chunks_mut(na) {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= s);
    }
    Policy::new(ns, na, probs).expect("mixture of distributions is a distribution")
}
