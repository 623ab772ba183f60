use mdp_core::FiniteMdp;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{softmax, InitLaw, Sigmoid};

/// `N^{-beta} sum_i outer_i sigma(inner_i . xi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct ScaledNetwork {
    width_n: usize,
    beta: f64,
    dim: usize,
    pub outer: Vec<f64>,
    /// Row-major `[width_n x dim]`.
    pub inner: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    width_n: usize,
    beta: f64,
    outer: Vec<f64>,
    inner: Vec<Vec<f64>>,
}

impl TryFrom<RawNetwork> for ScaledNetwork {
    type Error = String;

    fn try_from(r: RawNetwork) -> Result<Self, String> {
        if r.width_n == 0 || r.outer.len() != r.width_n || r.inner.len() != r.width_n {
            return Err("width_n must match outer and inner lengths".into());
        }
        let dim = r.inner[0].len();
        if r.inner.iter().any(|w| w.len() != dim) {
            return Err("inner rows must share one dimension".into());
        }
        Ok(ScaledNetwork { width_n: r.width_n, beta: r.beta, dim, outer: r.outer, inner: r.inner.concat() })
    }
}

impl From<ScaledNetwork> for RawNetwork {
    fn from(n: ScaledNetwork) -> Self {
        let inner = n.inner.chunks(n.dim).map(|c| c.to_vec()).collect();
        RawNetwork { width_n: n.width_n, beta: n.beta, outer: n.outer, inner }
    }
}

impl ScaledNetwork {
    /// I.i.d. draws from `law`, neuron by neuron: outer weight, then the
    /// inner vector.
    pub fn init<R: Rng + ?Sized>(width_n: usize, beta: f64, dim: usize, law: &InitLaw, rng: &mut R) -> Self {
        assert!(width_n >= 1, "width_n must be positive");
        let mut outer = Vec::with_capacity(width_n);
        let mut inner = Vec::with_capacity(width_n * dim);
        for _ in 0..width_n {
            outer.push(law.sample(rng));
            for _ in 0..dim {
                inner.push(law.sample(rng));
            }
        }
        ScaledNetwork { width_n, beta, dim, outer, inner }
    }

    pub fn from_parts(beta: f64, dim: usize, outer: Vec<f64>, inner: Vec<f64>) -> Self {
        assert_eq!(outer.len() * dim, inner.len());
        ScaledNetwork { width_n: outer.len(), beta, dim, outer, inner }
    }

    pub fn width_n(&self) -> usize {
        self.width_n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N^{-beta}`.
    pub fn scale(&self) -> f64 {
        (self.width_n as f64).powf(-self.beta)
    }

    pub fn inner_row(&self, i: usize) -> &[f64] {
        &self.inner[i * self.dim..(i + 1) * self.dim]
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        ScaledNetwork { beta, ..self.clone() }
    }

    pub fn forward(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.dim);
        let mut acc = 0.0;
        for (c, w) in self.outer.iter().zip(self.inner.chunks_exact(self.dim)) {
            let z: f64 = w.iter().zip(xi).map(|(a, b)| a * b).sum();
            acc += c * Sigmoid::eval(z);
        }
        acc * self.scale()
    }

    /// Outputs on every pair of `mdp`.
    pub fn table(&self, mdp: &FiniteMdp) -> Vec<f64> {
        (0..mdp.n_pairs()).map(|p| self.forward(mdp.input(p))).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Softmax over the action slice of the actor outputs at state `x`.
pub fn actor_model(actor: &ScaledNetwork, mdp: &FiniteMdp, x: usize) -> Vec<f64> {
    let p: Vec<f64> = (0..mdp.n_actions()).map(|a| actor.forward(mdp.input(mdp.pair(x, a)))).collect();
    softmax(&p)
}

/// `(1/N) sum_i h(outer_i, inner_i)`.
pub fn empirical_functional<H: Fn(f64, &[f64]) -> f64>(net: &ScaledNetwork, h: H) -> f64 {
    let s: f64 = net.outer.iter().zip(net.inner.chunks_exact(net.dim)).map(|(c, w)| h(*c, w)).sum();
    s / net.width_n as f64
}
