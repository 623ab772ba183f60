//! Monte Carlo tables of the neural kernel and its nested vector-field
//! derivatives under the initialization laws.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use mdp_core::{seed::derive_seed, FiniteMdp};
use networks::{InitLaw, Sigmoid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hyperdual::HyperDual;
use crate::{LimitError, Result};

const CHUNK: usize = 4096;
pub const MAX_DEPTH: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub critic_law: InitLaw,
    pub actor_law: InitLaw,
    pub mc_samples: usize,
    pub mc_seed: u64,
    /// Number of nested vector-field applications tabulated.
    pub depth: usize,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            critic_law: InitLaw::default(),
            actor_law: InitLaw::default(),
            mc_samples: 200_000,
            mc_seed: 0,
            depth: 1,
        }
    }
}

/// Tables for one initialization law.
#[derive(Debug, Clone, PartialEq)]
pub struct LawTables {
    /// `<B_{s,s'}, law>`, row-major `[S x S]`.
    pub kernel: Vec<f64>,
    /// Monte Carlo standard errors of `kernel`.
    pub kernel_se: Vec<f64>,
    /// `<c^2 sigma(w.xi_s) sigma(w.xi_s'), law>`: covariance of the rescaled
    /// initial outputs.
    pub ic_cov: Vec<f64>,
    /// `nested[k-1][s, s', e_1, .., e_k] = <C_{e_k} .. C_{e_1} B_{s,s'}, law>`,
    /// last index fastest.
    pub nested: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelTables {
    pub n_pairs: usize,
    pub spec: KernelSpec,
    pub critic: LawTables,
    pub actor: LawTables,
}

fn gram(inputs: &[f64], dim: usize) -> Vec<f64> {
    let s = inputs.len() / dim;
    let mut g = vec![0.0; s * s];
    for i in 0..s {
        for j in 0..s {
            g[i * s + j] = (0..dim).map(|l| inputs[i * dim + l] * inputs[j * dim + l]).sum();
        }
    }
    g
}

fn draw(law: &InitLaw, dim: usize, rng: &mut ChaCha8Rng, w: &mut [f64]) -> f64 {
    let c = law.sample(rng);
    for v in w.iter_mut().take(dim) {
        *v = law.sample(rng);
    }
    c
}

/// `e_i * x`.
fn times_generator<const N: usize>(x: &HyperDual<N>, i: usize) -> HyperDual<N> {
    let bit = 1 << i;
    let mut out = HyperDual::<N>::constant(0.0);
    for m in 0..N {
        if m & bit == 0 {
            out.c[m | bit] = x.c[m];
        }
    }
    out
}

/// Pushes `(c, w)` through `p_{j-1} = p_j + e_j V_{eta_j}(p_j)` for
/// `j = k..1`, where `V_eta(c, w) = (sigma(w.eta), c sigma'(w.eta) eta)`.
fn flow<const N: usize>(c: f64, w: &[f64], etas: &[&[f64]]) -> (HyperDual<N>, Vec<HyperDual<N>>) {
    let mut pc = HyperDual::<N>::constant(c);
    let mut pw: Vec<HyperDual<N>> = w.iter().map(|v| HyperDual::constant(*v)).collect();
    for j in (0..etas.len()).rev() {
        let eta = etas[j];
        let mut z = HyperDual::<N>::constant(0.0);
        for (wl, el) in pw.iter().zip(eta) {
            if *el != 0.0 {
                z = z.add(&wl.scale(*el));
            }
        }
        let (s, sp) = z.sigmoid_pair();
        let csp = pc.mul(&sp);
        let new_c = pc.add(&times_generator(&s, j));
        for (wl, el) in pw.iter_mut().zip(eta) {
            if *el != 0.0 {
                *wl = wl.add(&times_generator(&csp.scale(*el), j));
            }
        }
        pc = new_c;
    }
    (pc, pw)
}

/// Accumulates `C_{e_k}..C_{e_1} B_{s,s'}(c, w)` for every `s <= s'` and
/// every tuple into `acc` (layout of [`LawTables::nested`]).
fn accumulate_nested<const N: usize>(c: f64, w: &[f64], inputs: &[f64], g: &[f64], acc: &mut [f64]) {
    let k = N.trailing_zeros() as usize;
    let dim = w.len();
    let s_n = inputs.len() / dim;
    let tuples = s_n.pow(k as u32);
    let mut idx = vec![0usize; k];
    let mut sig = vec![(HyperDual::<N>::constant(0.0), HyperDual::<N>::constant(0.0)); s_n];
    for t in 0..tuples {
        // idx[k-1] fastest
        let mut r = t;
        for j in (0..k).rev() {
            idx[j] = r % s_n;
            r /= s_n;
        }
        let etas: Vec<&[f64]> = idx.iter().map(|&e| &inputs[e * dim..(e + 1) * dim]).collect();
        let (pc, pw) = flow::<N>(c, w, &etas);
        let c2 = pc.mul(&pc);
        for (s, out) in sig.iter_mut().enumerate() {
            let xi = &inputs[s * dim..(s + 1) * dim];
            let mut z = HyperDual::<N>::constant(0.0);
            for (wl, xl) in pw.iter().zip(xi) {
                if *xl != 0.0 {
                    z = z.add(&wl.scale(*xl));
                }
            }
            *out = z.sigmoid_pair();
        }
        for s in 0..s_n {
            for s2 in s..s_n {
                let b = sig[s].0.mul(&sig[s2].0).add(&c2.mul(&sig[s].1.mul(&sig[s2].1)).scale(g[s * s_n + s2]));
                acc[(s * s_n + s2) * tuples + t] += b.top();
            }
        }
    }
}

fn dispatch_nested(depth: usize, c: f64, w: &[f64], inputs: &[f64], g: &[f64], acc: &mut [f64]) {
    match depth {
        1 => accumulate_nested::<2>(c, w, inputs, g, acc),
        2 => accumulate_nested::<4>(c, w, inputs, g, acc),
        3 => accumulate_nested::<8>(c, w, inputs, g, acc),
        4 => accumulate_nested::<16>(c, w, inputs, g, acc),
        5 => accumulate_nested::<32>(c, w, inputs, g, acc),
        _ => unreachable!("depth checked by caller"),
    }
}

/// `C_{e_k}..C_{e_1} B_{s,s'}(c, w)` at a single parameter point.
pub fn nested_integrand(c: f64, w: &[f64], inputs: &[f64], etas: &[usize], s: usize, s2: usize) -> f64 {
    let dim = w.len();
    let s_n = inputs.len() / dim;
    let (s, s2) = (s.min(s2), s.max(s2));
    let k = etas.len();
    assert!((1..=MAX_DEPTH).contains(&k));
    let tuples = s_n.pow(k as u32);
    let mut acc = vec![0.0; s_n * s_n * tuples];
    dispatch_nested(k, c, w, inputs, &gram(inputs, dim), &mut acc);
    let t = etas.iter().fold(0, |t, e| t * s_n + e);
    acc[(s * s_n + s2) * tuples + t]
}

#[derive(Clone)]
struct Partial {
    kernel: Vec<f64>,
    kernel_sq: Vec<f64>,
    ic: Vec<f64>,
    nested: Vec<Vec<f64>>,
}

fn law_tables(mdp: &FiniteMdp, law: &InitLaw, samples: usize, seed: u64, depth: usize) -> LawTables {
    let dim = mdp.input_dim();
    let inputs = mdp.inputs();
    let s_n = mdp.n_pairs();
    let g = gram(inputs, dim);
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[ci as u64]));
            let count = CHUNK.min(samples - ci * CHUNK);
            let mut p = Partial {
                kernel: vec![0.0; s_n * s_n],
                kernel_sq: vec![0.0; s_n * s_n],
                ic: vec![0.0; s_n * s_n],
                nested: (1..=depth).map(|k| vec![0.0; s_n * s_n * s_n.pow(k as u32)]).collect(),
            };
            let mut w = vec![0.0; dim];
            let mut sv = vec![0.0; s_n];
            let mut sd = vec![0.0; s_n];
            for _ in 0..count {
                let c = draw(law, dim, &mut rng, &mut w);
                for s in 0..s_n {
                    let z: f64 = (0..dim).map(|l| w[l] * inputs[s * dim + l]).sum();
                    sv[s] = Sigmoid::eval(z);
                    sd[s] = sv[s] * (1.0 - sv[s]);
                }
                for s in 0..s_n {
                    for s2 in s..s_n {
                        let b = sv[s] * sv[s2] + c * c * sd[s] * sd[s2] * g[s * s_n + s2];
                        p.kernel[s * s_n + s2] += b;
                        p.kernel_sq[s * s_n + s2] += b * b;
                        p.ic[s * s_n + s2] += c * c * sv[s] * sv[s2];
                    }
                }
                for (k, acc) in p.nested.iter_mut().enumerate() {
                    dispatch_nested(k + 1, c, &w, inputs, &g, acc);
                }
            }
            p
        })
        .collect();
    let mut total = partials[0].clone();
    for p in &partials[1..] {
        for (a, b) in total.kernel.iter_mut().zip(&p.kernel) {
            *a += b;
        }
        for (a, b) in total.kernel_sq.iter_mut().zip(&p.kernel_sq) {
            *a += b;
        }
        for (a, b) in total.ic.iter_mut().zip(&p.ic) {
            *a += b;
        }
        for (ta, pa) in total.nested.iter_mut().zip(&p.nested) {
            for (a, b) in ta.iter_mut().zip(pa) {
                *a += b;
            }
        }
    }
    let n = samples as f64;
    let mut kernel = vec![0.0; s_n * s_n];
    let mut kernel_se = vec![0.0; s_n * s_n];
    let mut ic_cov = vec![0.0; s_n * s_n];
    for s in 0..s_n {
        for s2 in s..s_n {
            let i = s * s_n + s2;
            let mean = total.kernel[i] / n;
            let var = (total.kernel_sq[i] / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
            for j in [i, s2 * s_n + s] {
                kernel[j] = mean;
                kernel_se[j] = (var / n).sqrt();
                ic_cov[j] = total.ic[i] / n;
            }
        }
    }
    let nested = total
        .nested
        .into_iter()
        .enumerate()
        .map(|(k, mut t)| {
            let tuples = s_n.pow(k as u32 + 1);
            for s in 0..s_n {
                for s2 in s..s_n {
                    for e in 0..tuples {
                        let v = t[(s * s_n + s2) * tuples + e] / n;
                        t[(s * s_n + s2) * tuples + e] = v;
                        t[(s2 * s_n + s) * tuples + e] = v;
                    }
                }
            }
            t
        })
        .collect();
    LawTables { kernel, kernel_se, ic_cov, nested }
}

/// Builds both laws' tables. Equal laws share one set of samples.
pub fn build_kernels(mdp: &FiniteMdp, spec: &KernelSpec) -> Result<KernelTables> {
    if spec.mc_samples < 2 {
        return Err(LimitError::invalid("mc_samples", "need at least 2 samples"));
    }
    if spec.depth > MAX_DEPTH {
        return Err(LimitError::invalid("depth", format!("at most {MAX_DEPTH} nested applications")));
    }
    let critic = law_tables(mdp, &spec.critic_law, spec.mc_samples, derive_seed(spec.mc_seed, &[0]), spec.depth);
    let actor = if spec.actor_law == spec.critic_law {
        critic.clone()
    } else {
        law_tables(mdp, &spec.actor_law, spec.mc_samples, derive_seed(spec.mc_seed, &[1]), spec.depth)
    };
    Ok(KernelTables { n_pairs: mdp.n_pairs(), spec: spec.clone(), critic, actor })
}

/// Monte Carlo mean and standard error of `h(c, w)` under `law`.
pub fn law_expectation<H>(law: &InitLaw, dim: usize, samples: usize, seed: u64, h: H) -> (f64, f64)
where
    H: Fn(f64, &[f64]) -> f64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[ci as u64]));
            let mut w = vec![0.0; dim];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..CHUNK.min(samples - ci * CHUNK) {
                let c = draw(law, dim, &mut rng, &mut w);
                let v = h(c, &w);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl KernelTables {
    /// Cache file name derived from the MDP and the kernel settings.
    pub fn cache_path(dir: &Path, mdp: &FiniteMdp, spec: &KernelSpec) -> PathBuf {
        let key = format!("{}|{}", mdp.to_json(), serde_json::to_string(spec).expect("spec serializes"));
        let digest = mdp_core::seed::digest_hex(key.as_bytes());
        dir.join(format!("kernels-{}.bin", &digest[..16]))
    }

    /// Reads the cache entry when present, otherwise builds and writes it.
    pub fn load_or_build(dir: &Path, mdp: &FiniteMdp, spec: &KernelSpec) -> Result<Self> {
        let path = Self::cache_path(dir, mdp, spec);
        if path.exists() {
            let t = Self::read(&path)?;
            if t.spec == *spec && t.n_pairs == mdp.n_pairs() {
                return Ok(t);
            }
        }
        let t = build_kernels(mdp, spec)?;
        std::fs::create_dir_all(dir)?;
        t.write(&path)?;
        Ok(t)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        let spec = serde_json::to_vec(&self.spec).expect("spec serializes");
        buf.extend_from_slice(&(spec.len() as u64).to_le_bytes());
        buf.extend_from_slice(&spec);
        buf.extend_from_slice(&(self.n_pairs as u64).to_le_bytes());
        for law in [&self.critic, &self.actor] {
            let mut arrays = vec![&law.kernel, &law.kernel_se, &law.ic_cov];
            arrays.extend(law.nested.iter());
            buf.extend_from_slice(&(arrays.len() as u64).to_le_bytes());
            for a in arrays {
                buf.extend_from_slice(&(a.len() as u64).to_le_bytes());
                for v in a {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        std::fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut r = Reader { bytes: &bytes, pos: 0 };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(LimitError::Cache("bad magic".into()));
        }
        let len = r.u64()? as usize;
        let spec: KernelSpec =
            serde_json::from_slice(r.take(len)?).map_err(|e| LimitError::Cache(e.to_string()))?;
        let n_pairs = r.u64()? as usize;
        let mut laws = Vec::new();
        for _ in 0..2 {
            let count = r.u64()? as usize;
            if count < 3 {
                return Err(LimitError::Cache("truncated table list".into()));
            }
            let mut arrays = Vec::with_capacity(count);
            for _ in 0..count {
                let n = r.u64()? as usize;
                let raw = r.take(n * 8)?;
                arrays.push(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect::<Vec<_>>());
            }
            let nested = arrays.split_off(3);
            let ic_cov = arrays.pop().unwrap();
            let kernel_se = arrays.pop().unwrap();
            let kernel = arrays.pop().unwrap();
            laws.push(LawTables { kernel, kernel_se, ic_cov, nested });
        }
        let actor = laws.pop().unwrap();
        let critic = laws.pop().unwrap();
        Ok(KernelTables { n_pairs, spec, critic, actor })
    }
}

const MAGIC: &[u8] = b"SACKERN1";

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(LimitError::Cache("unexpected end of file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
