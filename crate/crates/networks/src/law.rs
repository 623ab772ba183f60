use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Symmetric truncated normal: `std * Z` with `|Z| <= trunc_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitLaw {
    pub std: f64,
    pub trunc_bound: f64,
}

impl Default for InitLaw {
    fn default() -> Self {
        InitLaw { std: 1.0, trunc_bound: 3.0 }
    }
}

impl InitLaw {
    /// Rejection sampler; always consumes at least one normal draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z.abs() <= self.trunc_bound {
                return self.std * z;
            }
        }
    }
}
