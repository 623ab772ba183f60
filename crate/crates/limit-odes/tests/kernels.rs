use limit_odes::softmax::{softmax_derivative_tensor, softmax_series};
use limit_odes::{build_kernels, law_expectation, nested_integrand, KernelSpec, KernelTables, LimitError};
use mdp_core::build_forest;
use networks::{softmax, InitLaw, Sigmoid};
use proptest::prelude::*;

fn spec(samples: usize, depth: usize) -> KernelSpec {
    KernelSpec { mc_samples: samples, depth, ..KernelSpec::default() }
}

#[test]
fn zero_std_law_gives_quarter_kernel() {
    let mdp = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let law = InitLaw { std: 0.0, trunc_bound: 3.0 };
    let k = build_kernels(&mdp, &KernelSpec { critic_law: law, actor_law: law, ..spec(1000, 1) }).unwrap();
    for v in k.critic.kernel.iter().chain(&k.actor.kernel) {
        assert!((v - 0.25).abs() < 1e-15);
    }
    assert!(k.critic.ic_cov.iter().all(|v| *v == 0.0));
}

#[test]
fn kernel_symmetric_and_self_consistent() {
    let mdp = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let small = build_kernels(&mdp, &spec(20_000, 1)).unwrap();
    let big = build_kernels(&mdp, &KernelSpec { mc_seed: 99, ..spec(200_000, 1) }).unwrap();
    let s = mdp.n_pairs();
    for i in 0..s {
        for j in 0..s {
            assert_eq!(small.critic.kernel[i * s + j], small.critic.kernel[j * s + i]);
            let d = (small.critic.kernel[i * s + j] - big.critic.kernel[i * s + j]).abs();
            let se = small.critic.kernel_se[i * s + j].hypot(big.critic.kernel_se[i * s + j]);
            assert!(d < 3.0 * se, "entry ({i},{j}) moved {d} vs se {se}");
        }
    }
    // nested tables are symmetric in the two pair slots too
    let t = &small.critic.nested[0];
    for i in 0..s {
        for j in 0..s {
            for e in 0..s {
                assert_eq!(t[(i * s + j) * s + e], t[(j * s + i) * s + e]);
            }
        }
    }
}

#[test]
fn kernel_matches_direct_expectation() {
    let mdp = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let k = build_kernels(&mdp, &spec(50_000, 1)).unwrap();
    let (x0, x1) = (mdp.input(1).to_vec(), mdp.input(4).to_vec());
    let dot = |w: &[f64], x: &[f64]| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let xx = dot(&x0, &x1);
    let (mean, se) = law_expectation(&InitLaw::default(), mdp.input_dim(), 200_000, 5, |c, w| {
        let (a, b) = (dot(w, &x0), dot(w, &x1));
        Sigmoid::eval(a) * Sigmoid::eval(b) + c * c * xx * Sigmoid::eval(a) * (1.0 - Sigmoid::eval(a)) * Sigmoid::eval(b) * (1.0 - Sigmoid::eval(b))
    });
    let s = mdp.n_pairs();
    let d = (k.critic.kernel[s + 4] - mean).abs();
    assert!(d < 3.0 * se.hypot(k.critic.kernel_se[s + 4]), "{d} {se}");
}

fn bfun(c: f64, w: &[f64], inputs: &[f64], dim: usize, s: usize, s2: usize) -> f64 {
    let x = &inputs[s * dim..(s + 1) * dim];
    let y = &inputs[s2 * dim..(s2 + 1) * dim];
    let a: f64 = w.iter().zip(x).map(|(p, q)| p * q).sum();
    let b: f64 = w.iter().zip(y).map(|(p, q)| p * q).sum();
    let xy: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
    let (sa, sb) = (Sigmoid::eval(a), Sigmoid::eval(b));
    sa * sb + c * c * xy * sa * (1.0 - sa) * sb * (1.0 - sb)
}

/// Moves `(c, w)` by `tau` along the update direction of pair `e`.
fn shift(c: f64, w: &[f64], eta: &[f64], tau: f64) -> (f64, Vec<f64>) {
    let z: f64 = w.iter().zip(eta).map(|(a, b)| a * b).sum();
    let s = Sigmoid::eval(z);
    (c + tau * s, w.iter().zip(eta).map(|(wl, el)| wl + tau * c * s * (1.0 - s) * el).collect())
}

#[test]
fn nested_integrand_matches_finite_differences() {
    let mdp = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let dim = mdp.input_dim();
    let inputs = mdp.inputs();
    let c = 0.7;
    let w = [0.3, -0.8, 0.5, 1.1, -0.4];
    let h = 1e-5;
    let (s, s2, e1, e2) = (1, 4, 3, 0);
    let eta = |e: usize| &inputs[e * dim..(e + 1) * dim];

    let (cp, wp) = shift(c, &w, eta(e1), h);
    let (cm, wm) = shift(c, &w, eta(e1), -h);
    let fd1 = (bfun(cp, &wp, inputs, dim, s, s2) - bfun(cm, &wm, inputs, dim, s, s2)) / (2.0 * h);
    let one = nested_integrand(c, &w, inputs, &[e1], s, s2);
    assert!((one - fd1).abs() < 1e-8, "{one} {fd1}");

    let (cp, wp) = shift(c, &w, eta(e2), h);
    let (cm, wm) = shift(c, &w, eta(e2), -h);
    let fd2 = (nested_integrand(cp, &wp, inputs, &[e1], s, s2) - nested_integrand(cm, &wm, inputs, &[e1], s, s2)) / (2.0 * h);
    let two = nested_integrand(c, &w, inputs, &[e1, e2], s, s2);
    assert!((two - fd2).abs() < 1e-7, "{two} {fd2}");
}

#[test]
fn cache_round_trip_and_bad_magic() {
    let mdp = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let sp = spec(5000, 2);
    let dir = tempfile::tempdir().unwrap();
    let built = KernelTables::load_or_build(dir.path(), &mdp, &sp).unwrap();
    let path = KernelTables::cache_path(dir.path(), &mdp, &sp);
    assert!(path.exists());
    assert_eq!(KernelTables::read(&path).unwrap(), built);
    assert_eq!(KernelTables::load_or_build(dir.path(), &mdp, &sp).unwrap(), built);
    std::fs::write(&path, b"garbage").unwrap();
    assert!(matches!(KernelTables::read(&path), Err(LimitError::Cache(_))));
}

#[test]
fn kernels_reproducible_under_seed() {
    let mdp = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    assert_eq!(build_kernels(&mdp, &spec(9000, 2)).unwrap(), build_kernels(&mdp, &spec(9000, 2)).unwrap());
}

#[test]
fn jacobian_is_diag_minus_outer() {
    let f = softmax(&[0.2, -1.0, 0.7]);
    let d = softmax_derivative_tensor(&f, 1).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            let want = if a == b { f[a] } else { 0.0 } - f[a] * f[b];
            assert!((d.data[a * 3 + b] - want).abs() < 1e-15);
        }
    }
}

#[test]
fn tensor_order_bounds() {
    let f = softmax(&[0.0, 1.0]);
    assert!(matches!(softmax_derivative_tensor(&f, 0), Err(LimitError::UnsupportedOrder(0))));
    assert!(matches!(softmax_derivative_tensor(&f, 5), Err(LimitError::UnsupportedOrder(5))));
}

/// Central difference of the order-(k-1) tensor along basis direction `b`.
fn fd_tensor(p: &[f64], k: usize, b: usize, h: f64) -> Vec<f64> {
    let eval = |sign: f64| {
        let mut q = p.to_vec();
        q[b] += sign * h;
        let f = softmax(&q);
        if k == 1 {
            f
        } else {
            softmax_derivative_tensor(&f, k - 1).unwrap().data
        }
    };
    eval(1.0).iter().zip(eval(-1.0)).map(|(a, c)| (a - c) / (2.0 * h)).collect()
}

#[test]
fn tensors_match_finite_differences_to_order_three() {
    let p = [0.3, -0.6, 1.2, 0.1];
    let n = p.len();
    let f = softmax(&p);
    for k in 1..=3 {
        let d = softmax_derivative_tensor(&f, k).unwrap();
        for b in 0..n {
            let fd = fd_tensor(&p, k, b, 1e-5);
            for (idx, want) in fd.iter().enumerate() {
                let got = d.data[idx * n + b];
                assert!((got - want).abs() < 1e-6, "order {k} dir {b} idx {idx}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn single_action_tensors_vanish() {
    for k in 1..=4 {
        let d = softmax_derivative_tensor(&[1.0], k).unwrap();
        assert!(d.data.iter().all(|v| v.abs() < 1e-15));
    }
}

#[test]
fn series_matches_perturbed_softmax() {
    let p = vec![vec![0.3, -0.2, 0.9], vec![1.0, -0.5, 0.2], vec![-0.7, 0.4, 0.1], vec![0.2, 0.9, -1.3], vec![0.5, 0.1, 0.3]];
    let f0 = softmax(&p[0]);
    let tensors: Vec<_> = (1..=4).map(|k| softmax_derivative_tensor(&f0, k).unwrap()).collect();
    let series = softmax_series(&p, &tensors);
    for e in [1e-2f64, 2e-2] {
        let q: Vec<f64> = (0..3).map(|i| (0..5).map(|m| e.powi(m as i32) * p[m][i]).sum()).collect();
        let exact = softmax(&q);
        for i in 0..3 {
            let approx: f64 = (0..5).map(|m| e.powi(m as i32) * series[m][i]).sum();
            assert!((approx - exact[i]).abs() < 50.0 * e.powi(5), "e={e}: {approx} {}", exact[i]);
        }
    }
    for fm in &series[1..] {
        assert!(fm.iter().sum::<f64>().abs() < 1e-14);
    }
}

proptest! {
    #[test]
    fn contraction_with_constant_vanishes(p in prop::collection::vec(-2.0f64..2.0, 2..5), c in -3.0f64..3.0, k in 1usize..=4) {
        let n = p.len();
        let f = softmax(&p);
        let d = softmax_derivative_tensor(&f, k).unwrap();
        let ones = vec![c; n];
        let free: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        // constant in any one slot kills the tensor
        for slot in 0..k {
            let args: Vec<&[f64]> = (0..k).map(|j| if j == slot { ones.as_slice() } else { free.as_slice() }).collect();
            for v in d.contract(&args) {
                prop_assert!(v.abs() < 1e-12);
            }
        }
    }
}
