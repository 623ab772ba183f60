//! Derivative tensors of softmax and the series expansion of
//! `softmax(P0 + e P1 + e^2 P2 + ...)`.

use crate::{LimitError, Result};

pub const MAX_TENSOR_ORDER: usize = 4;

/// `D^k softmax` at a point, `data[a, b_1, .., b_k]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeTensor {
    pub order: usize,
    pub n: usize,
    pub data: Vec<f64>,
}

/// All set partitions of `{0..k}` as lists of blocks.
fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for item in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for b in 0..p.len() {
                let mut q = p.clone();
                q[b].push(item);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![item]);
            next.push(q);
        }
        out = next;
    }
    out
}

/// Joint cumulant of the indicators `1{A = b_i}` under the categorical law `f`.
fn indicator_cumulant(f: &[f64], b: &[usize], partitions: &[Vec<Vec<usize>>]) -> f64 {
    let mut total = 0.0;
    for p in partitions {
        let mut prod = 1.0;
        for block in p {
            let first = b[block[0]];
            if block.iter().any(|&i| b[i] != first) {
                prod = 0.0;
                break;
            }
            prod *= f[first];
        }
        if prod != 0.0 {
            let r = p.len();
            let fact: f64 = (1..r).map(|v| v as f64).product();
            let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
            total += sign * fact * prod;
        }
    }
    total
}

/// Exact `k`-th derivative tensor of softmax at the point whose value is
/// `f0`. Writing `s_a = exp(P_a - L)` with `L` the log-partition, the
/// derivatives of `L` are joint cumulants of the category indicators and
/// `D^k s_a` follows from the set-partition form of the chain rule.
pub fn softmax_derivative_tensor(f0: &[f64], k: usize) -> Result<DerivativeTensor> {
    if k == 0 || k > MAX_TENSOR_ORDER {
        return Err(LimitError::UnsupportedOrder(k));
    }
    let n = f0.len();
    let outer = set_partitions(k);
    let cumulant_parts: Vec<Vec<Vec<Vec<usize>>>> = (0..=k).map(set_partitions).collect();
    let total = n.pow(k as u32 + 1);
    let mut data = vec![0.0; total];
    let mut b = vec![0usize; k];
    for (flat, out) in data.iter_mut().enumerate() {
        let mut r = flat;
        for j in (0..k).rev() {
            b[j] = r % n;
            r /= n;
        }
        let a = r;
        let mut sum = 0.0;
        for p in &outer {
            let mut prod = 1.0;
            for block in p {
                let d = if block.len() == 1 {
                    let bb = b[block[0]];
                    (if bb == a { 1.0 } else { 0.0 }) - f0[bb]
                } else {
                    let idx: Vec<usize> = block.iter().map(|&i| b[i]).collect();
                    -indicator_cumulant(f0, &idx, &cumulant_parts[block.len()])
                };
                prod *= d;
                if prod == 0.0 {
                    break;
                }
            }
            sum += prod;
        }
        *out = f0[a] * sum;
    }
    Ok(DerivativeTensor { order: k, n, data })
}

impl DerivativeTensor {
    /// `D^k[v_1, .., v_k]` as a vector over the output index.
    pub fn contract(&self, v: &[&[f64]]) -> Vec<f64> {
        assert_eq!(v.len(), self.order);
        let mut cur = self.data.clone();
        // contract the last index repeatedly
        for vec in v.iter().rev() {
            cur = cur.chunks_exact(self.n).map(|c| c.iter().zip(vec.iter()).map(|(a, b)| a * b).sum()).collect();
        }
        cur
    }
}

/// Ordered tuples of positive integers summing to `m` with `k` parts.
pub(crate) fn compositions(m: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return if m == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=m.saturating_sub(k - 1) {
        for mut rest in compositions(m - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Series coefficients of `softmax(sum_m e^m p[m])` up to the length of `p`,
/// via `f^(m) = sum_k 1/k! sum_{j_1+..+j_k=m} D^k[p[j_1], .., p[j_k]]`.
/// `tensors[k-1]` must hold `D^k` at `softmax(p[0])` for `k < p.len()`.
pub fn softmax_series(p: &[Vec<f64>], tensors: &[DerivativeTensor]) -> Vec<Vec<f64>> {
    let f0 = networks::softmax(&p[0]);
    let n = f0.len();
    let mut out = vec![f0];
    for m in 1..p.len() {
        let mut fm = vec![0.0; n];
        let mut fact = 1.0;
        for k in 1..=m {
            fact *= k as f64;
            for comp in compositions(m, k) {
                let args: Vec<&[f64]> = comp.iter().map(|&j| p[j].as_slice()).collect();
                for (o, v) in fm.iter_mut().zip(tensors[k - 1].contract(&args)) {
                    *o += v / fact;
                }
            }
        }
        out.push(fm);
    }
    out
}
