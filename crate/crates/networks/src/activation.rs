use std::sync::OnceLock;

/// Activation with the derivative quadruple the limit equations need.
pub trait Activation {
    fn value(&self, z: f64) -> f64;
    fn d1(&self, z: f64) -> f64;
    fn d2(&self, z: f64) -> f64;
    fn d3(&self, z: f64) -> f64;
}

/// Logistic sigmoid.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sigmoid;

pub const MAX_DERIVATIVE: usize = 10;

// sigma^(n) = P_n(sigma) with P_0(s) = s and P_{n+1}(s) = P_n'(s) s (1 - s).
fn polynomials() -> &'static Vec<Vec<f64>> {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut out = vec![vec![0.0, 1.0]];
        for n in 0..MAX_DERIVATIVE {
            let p = &out[n];
            let dp: Vec<f64> = (1..p.len()).map(|k| k as f64 * p[k]).collect();
            // multiply by s - s^2
            let mut next = vec![0.0; dp.len() + 2];
            for (k, c) in dp.iter().enumerate() {
                next[k + 1] += c;
                next[k + 2] -= c;
            }
            out.push(next);
        }
        out
    })
}

impl Sigmoid {
    #[inline]
    pub fn eval(z: f64) -> f64 {
        1.0 / (1.0 + (-z).exp())
    }

    /// Fills `out[j]` with the j-th derivative at `z`, for `j < out.len()`.
    ///
    /// # Panics
    /// If more than `MAX_DERIVATIVE + 1` entries are requested.
    pub fn derivatives(z: f64, out: &mut [f64]) {
        assert!(out.len() <= MAX_DERIVATIVE + 1, "sigmoid derivative order too high");
        let s = Self::eval(z);
        for (j, o) in out.iter_mut().enumerate() {
            *o = polynomials()[j].iter().rev().fold(0.0, |acc, c| acc * s + c);
        }
    }
}

impl Activation for Sigmoid {
    fn value(&self, z: f64) -> f64 {
        Self::eval(z)
    }

    fn d1(&self, z: f64) -> f64 {
        let s = Self::eval(z);
        s * (1.0 - s)
    }

    fn d2(&self, z: f64) -> f64 {
        let s = Self::eval(z);
        s * (1.0 - s) * (1.0 - 2.0 * s)
    }

    fn d3(&self, z: f64) -> f64 {
        let s = Self::eval(z);
        s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s)
    }
}
