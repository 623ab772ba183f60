//! Truncated multivariate dual numbers with `K` nilpotent generators
//! (`e_i^2 = 0`), stored as `N = 2^K` coefficients indexed by subsets.

use networks::Sigmoid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperDual<const N: usize> {
    pub c: [f64; N],
}

impl<const N: usize> HyperDual<N> {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        HyperDual { c }
    }

    /// `v + e_i`.
    pub fn generator(v: f64, i: usize) -> Self {
        let mut h = Self::constant(v);
        h.c[1 << i] = 1.0;
        h
    }

    pub fn real(&self) -> f64 {
        self.c[0]
    }

    /// Coefficient of the product of all generators.
    pub fn top(&self) -> f64 {
        self.c[N - 1]
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut c = self.c;
        for (a, b) in c.iter_mut().zip(&o.c) {
            *a += b;
        }
        HyperDual { c }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|v| *v *= s);
        HyperDual { c }
    }

    /// Subset convolution.
    pub fn mul(&self, o: &Self) -> Self {
        let mut c = [0.0; N];
        for (m, out) in c.iter_mut().enumerate() {
            // walk the submasks of m
            let mut i = m;
            loop {
                *out += self.c[i] * o.c[m ^ i];
                if i == 0 {
                    break;
                }
                i = (i - 1) & m;
            }
        }
        HyperDual { c }
    }

    /// `f(self)` from the derivatives `d[j] = f^(j)(real)`; `d` needs
    /// `log2 N + 1` entries.
    pub fn compose(&self, d: &[f64]) -> Self {
        let mut nil = *self;
        nil.c[0] = 0.0;
        let mut out = Self::constant(d[0]);
        let mut power = Self::constant(1.0);
        let mut fact = 1.0;
        for (j, dj) in d.iter().enumerate().skip(1) {
            power = power.mul(&nil);
            fact *= j as f64;
            if power.c.iter().all(|v| *v == 0.0) {
                break;
            }
            out = out.add(&power.scale(dj / fact));
        }
        out
    }

    /// `(sigma(self), sigma'(self))`.
    pub fn sigmoid_pair(&self) -> (Self, Self) {
        let k = N.trailing_zeros() as usize;
        let mut d = [0.0; 8];
        Sigmoid::derivatives(self.c[0], &mut d[..k + 2]);
        (self.compose(&d[..k + 1]), self.compose(&d[1..k + 2]))
    }
}
