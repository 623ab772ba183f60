//! Drift of the limit system written as power series in the small
//! parameter: every quantity is a list of coefficients, products are Cauchy
//! products, and the stationary laws are expanded around order 0.

use mdp_core::{kernel, ChainKind, FiniteMdp, StationarySolver};
use nalgebra::DMatrix;
use trainer::{eta_limit, zeta_limit};

use crate::softmax::{softmax_derivative_tensor, softmax_series, DerivativeTensor};
use crate::{KernelTables, Result};

type Series = Vec<Vec<f64>>;

pub(crate) struct Model<'a> {
    pub ns: usize,
    pub na: usize,
    pub s: usize,
    pub reward: Vec<f64>,
    pub p: Vec<f64>,
    pub pt: Vec<f64>,
    pub gamma: f64,
    pub alpha: f64,
    pub kern: &'a KernelTables,
}

/// Order-0 quantities at one time, shared by every expansion at that time.
pub(crate) struct Base {
    pub eta: f64,
    pub zeta: f64,
    pub tensors: Vec<Vec<DerivativeTensor>>,
    pub g0: Vec<f64>,
    pub pi: StationarySolver,
    pub sig: StationarySolver,
}

pub(crate) struct Expansion {
    pub f: Series,
    pub g: Series,
    pub pi: Series,
    pub sigma: Series,
    pub w: Series,
    pub u: Series,
    pub dq: Series,
    pub dp: Series,
}

fn matvec(a: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    a.chunks_exact(n).map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// Cauchy product coefficient `sum_{i=0}^m a[i] * b[m-i]`, elementwise.
fn cauchy(a: &Series, b: &Series, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; a[0].len()];
    for i in 0..=m {
        for (o, (x, y)) in out.iter_mut().zip(a[i].iter().zip(&b[m - i])) {
            *o += x * y;
        }
    }
    out
}

impl<'a> Model<'a> {
    pub fn new(mdp: &FiniteMdp, kern: &'a KernelTables, alpha: f64) -> Self {
        Model {
            ns: mdp.n_states(),
            na: mdp.n_actions(),
            s: mdp.n_pairs(),
            reward: mdp.rewards().to_vec(),
            p: kernel(mdp, ChainKind::Standard).as_slice().to_vec(),
            pt: kernel(mdp, ChainKind::Auxiliary).as_slice().to_vec(),
            gamma: mdp.gamma(),
            alpha,
            kern,
        }
    }

    fn pair_matrix(&self, k: &[f64], g: &[f64]) -> DMatrix<f64> {
        let (ns, na) = (self.ns, self.na);
        DMatrix::from_fn(self.s, self.s, |i, j| k[i * ns + j / na] * g[j])
    }

    pub fn base(&self, t: f64, p0: &[f64], max_k: usize) -> Result<Base> {
        let eta = eta_limit(t);
        let na = self.na;
        let mut g0 = Vec::with_capacity(self.s);
        let mut tensors = Vec::with_capacity(self.ns);
        for row in p0.chunks_exact(na) {
            let f = networks::softmax(row);
            tensors.push((1..=max_k).map(|k| softmax_derivative_tensor(&f, k)).collect::<Result<Vec<_>>>()?);
            g0.extend(f.iter().map(|v| eta / na as f64 + (1.0 - eta) * v));
        }
        let pi = StationarySolver::new(&self.pair_matrix(&self.p, &g0))?;
        let sig = StationarySolver::new(&self.pair_matrix(&self.pt, &g0))?;
        Ok(Base { eta, zeta: zeta_limit(t), tensors, g0, pi, sig })
    }

    /// Perturbed stationary law: `law[m] (I - M0 + W) = sum_{j=1}^m law[m-j] M_j`
    /// with `M_j[xi, (x',a')] = k(x'|xi) g[j](x',a')`.
    fn stationary_series(&self, solver: &StationarySolver, k: &[f64], g: &Series) -> Series {
        let (ns, na) = (self.ns, self.na);
        let mut out = vec![solver.stationary().as_slice().to_vec()];
        let mut nu: Series = Vec::new();
        for m in 1..g.len() {
            let prev = &out[m - 1];
            let mut v = vec![0.0; ns];
            for (xi, w) in prev.iter().enumerate() {
                for x in 0..ns {
                    v[x] += w * k[xi * ns + x];
                }
            }
            nu.push(v);
            let mut rhs = vec![0.0; self.s];
            for j in 1..=m {
                for (pair, r) in rhs.iter_mut().enumerate() {
                    *r += nu[m - j][pair / na] * g[j][pair];
                }
            }
            out.push(solver.solve_row(&rhs));
        }
        out
    }

    /// Series of every derived quantity and of the output drifts. `av[j]`,
    /// `amu[j]` are the order-`j` kernel tables; missing orders count as 0.
    pub fn expand(&self, base: &Base, q: &Series, p: &Series, av: &[&[f64]], amu: &[&[f64]]) -> Expansion {
        let len = q.len();
        let (ns, na, s) = (self.ns, self.na, self.s);

        let mut f: Series = vec![vec![0.0; s]; len];
        for x in 0..ns {
            let px: Series = p.iter().map(|pm| pm[x * na..(x + 1) * na].to_vec()).collect();
            for (m, fm) in softmax_series(&px, &base.tensors[x]).into_iter().enumerate() {
                f[m][x * na..(x + 1) * na].copy_from_slice(&fm);
            }
        }
        let mut g: Series = vec![base.g0.clone()];
        for fm in f.iter().skip(1) {
            g.push(fm.iter().map(|v| (1.0 - base.eta) * v).collect());
        }
        let pi = self.stationary_series(&base.pi, &self.p, &g);
        let sigma = self.stationary_series(&base.sig, &self.pt, &g);

        let mut w = Vec::with_capacity(len);
        let mut td = Vec::with_capacity(len);
        let mut u = Vec::with_capacity(len);
        let mut y: Series = Vec::with_capacity(len);
        for m in 0..len {
            let gq = cauchy(&g, q, m);
            let v: Vec<f64> = gq.chunks_exact(na).map(|r| r.iter().sum()).collect();
            let e = matvec(&self.p, &v);
            let tdm: Vec<f64> = (0..s)
                .map(|i| if m == 0 { self.reward[i] } else { 0.0 } + self.gamma * e[i] - q[m][i])
                .collect();
            td.push(tdm);
            w.push(cauchy(&pi, &td, m));

            let sq = cauchy(&sigma, q, m);
            y.push(sq.chunks_exact(na).map(|r| r.iter().sum()).collect());
            let mut um = sq;
            for i in 0..=m {
                for (pair, o) in um.iter_mut().enumerate() {
                    *o -= f[i][pair] * y[m - i][pair / na];
                }
            }
            u.push(um);
        }

        let drift = |tables: &[&[f64]], weights: &Series, rate: f64, m: usize| {
            let mut out = vec![0.0; s];
            for (j, a) in tables.iter().enumerate().take(m + 1) {
                for (o, v) in out.iter_mut().zip(matvec(a, &weights[m - j])) {
                    *o += rate * v;
                }
            }
            out
        };
        let dq = (0..len).map(|m| drift(av, &w, self.alpha, m)).collect();
        let dp = (0..len).map(|m| drift(amu, &u, base.zeta, m)).collect();
        Expansion { f, g, pi, sigma, w, u, dq, dp }
    }

    /// Linearization of the order-0 output drift at `(q0, p0)` with frozen
    /// kernels, as a `[2S x 2S]` row-major matrix acting on `(dQ, dP)`.
    pub fn linearization(&self, base: &Base, q0: &[f64], p0: &[f64]) -> Vec<f64> {
        let s = self.s;
        let n = 2 * s;
        let mut l = vec![0.0; n * n];
        let av = [self.kern.critic.kernel.as_slice()];
        let amu = [self.kern.actor.kernel.as_slice()];
        for col in 0..n {
            let mut q1 = vec![0.0; s];
            let mut p1 = vec![0.0; s];
            if col < s {
                q1[col] = 1.0;
            } else {
                p1[col - s] = 1.0;
            }
            let ex = self.expand(base, &vec![q0.to_vec(), q1], &vec![p0.to_vec(), p1], &av, &amu);
            for i in 0..s {
                l[i * n + col] = ex.dq[1][i];
                l[(s + i) * n + col] = ex.dp[1][i];
            }
        }
        l
    }
}
