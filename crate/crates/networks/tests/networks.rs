use mdp_core::build_forest;
use networks::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_std_gives_zero_network() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let net = ScaledNetwork::init(50, 0.7, 5, &InitLaw { std: 0.0, trunc_bound: 3.0 }, &mut rng);
    assert!(net.outer.iter().chain(&net.inner).all(|v| *v == 0.0));
    assert_eq!(net.forward(&[1.0, 0.0, 0.0, 1.0, 0.0]), 0.0);
}

#[test]
fn init_is_deterministic_and_bounded() {
    let law = InitLaw::default();
    let a = ScaledNetwork::init(300, 0.75, 4, &law, &mut ChaCha8Rng::seed_from_u64(4));
    let b = ScaledNetwork::init(300, 0.75, 4, &law, &mut ChaCha8Rng::seed_from_u64(4));
    assert_eq!(a, b);
    for i in 0..300 {
        assert!(a.outer[i].abs() <= 3.0);
        let norm: f64 = a.inner_row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= 3.0 * 2.0);
    }
}

#[test]
fn outer_mean_obeys_clt_bound() {
    let n = 1_000_000;
    let net = ScaledNetwork::init(n, 1.0, 1, &InitLaw::default(), &mut ChaCha8Rng::seed_from_u64(8));
    let mean = empirical_functional(&net, |c, _| c);
    assert!(mean.abs() <= 4.0 / (n as f64).sqrt(), "{mean}");
    assert!((empirical_functional(&net, |_, _| 1.0) - 1.0).abs() < 1e-12);
}

#[test]
fn forward_examples() {
    let net = ScaledNetwork::from_parts(1.0, 2, vec![2.0], vec![0.3, -0.3]);
    assert!((net.forward(&[1.0, 1.0]) - 1.0).abs() < 1e-15);
    let zero = ScaledNetwork::from_parts(0.6, 2, vec![0.0; 3], vec![0.5; 6]);
    assert_eq!(zero.forward(&[0.2, 0.9]), 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = ScaledNetwork::init(3, 0.8, 3, &InitLaw::default(), &mut rng);
    let xi = [0.4, -1.2, 0.7];
    let mut oracle = 0.0;
    for i in 0..3 {
        let mut z = 0.0;
        for j in 0..3 {
            z += net.inner[i * 3 + j] * xi[j];
        }
        oracle += net.outer[i] / (1.0 + (-z).exp());
    }
    oracle /= 3f64.powf(0.8);
    assert!((net.forward(&xi) - oracle).abs() < 1e-14);
}

#[test]
fn beta_rescaling_and_output_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 64;
    let net = ScaledNetwork::init(n, 0.7, 2, &InitLaw::default(), &mut rng);
    let xi = [0.3, 0.5];
    let ratio = net.forward(&xi) / net.with_beta(0.9).forward(&xi);
    assert!((ratio - (n as f64).powf(0.9 - 0.7)).abs() < 1e-12);
    let cmax = net.outer.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for _ in 0..100 {
        let xi = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        assert!(net.forward(&xi).abs() <= (n as f64).powf(0.3) * cmax);
    }
}

#[test]
fn actor_model_examples() {
    let mdp = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let flat = ScaledNetwork::from_parts(1.0, 5, vec![0.0; 4], vec![0.1; 20]);
    for x in 0..3 {
        let f = actor_model(&flat, &mdp, x);
        assert!((f[0] - 0.5).abs() < 1e-15 && (f[1] - 0.5).abs() < 1e-15);
    }
    let f = softmax(&[2f64.ln(), 0.0]);
    assert!((f[0] - 2.0 / 3.0).abs() < 1e-15 && (f[1] - 1.0 / 3.0).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let net = ScaledNetwork::init(40, 0.6, 5, &InitLaw::default(), &mut rng);
    for x in 0..3 {
        let f = actor_model(&net, &mdp, x);
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
    let p = [0.3, -1.1, 2.0];
    let shifted: Vec<f64> = p.iter().map(|v| v + 17.5).collect();
    for (a, b) in softmax(&p).iter().zip(softmax(&shifted)) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn sigmoid_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = Sigmoid;
    let h = 1e-5;
    for _ in 0..100 {
        let z = rng.random_range(-6.0..6.0);
        let fd = |f: &dyn Fn(f64) -> f64| (f(z + h) - f(z - h)) / (2.0 * h);
        assert!((s.d1(z) - fd(&|u| s.value(u))).abs() < 1e-8);
        assert!((s.d2(z) - fd(&|u| s.d1(u))).abs() < 1e-8);
        assert!((s.d3(z) - fd(&|u| s.d2(u))).abs() < 1e-8);
        for v in [s.value(z), s.d1(z), s.d2(z), s.d3(z)] {
            assert!(v.abs() <= 1.0);
        }
        let mut all = [0.0; 8];
        Sigmoid::derivatives(z, &mut all);
        assert!((all[2] - s.d2(z)).abs() < 1e-14 && (all[3] - s.d3(z)).abs() < 1e-14);
        for k in 3..7 {
            let mut lo = [0.0; 8];
            let mut hi = [0.0; 8];
            Sigmoid::derivatives(z - h, &mut lo);
            Sigmoid::derivatives(z + h, &mut hi);
            assert!((all[k + 1] - (hi[k] - lo[k]) / (2.0 * h)).abs() < 1e-7, "order {}", k + 1);
        }
    }
}

#[test]
fn clt_variance_of_rescaled_output() {
    // N^{1/2} <c sigma(w.xi), v^N> has variance <(c sigma(w.xi))^2, v0>
    let law = InitLaw::default();
    let xi = [0.0, 1.0, 0.0, 1.0, 0.0];
    let n = 256;
    let seeds = 10_000;
    let mut vals = Vec::with_capacity(seeds);
    for s in 0..seeds {
        let net = ScaledNetwork::init(n, 1.0, 5, &law, &mut ChaCha8Rng::seed_from_u64(1000 + s as u64));
        let m = empirical_functional(&net, |c, w| {
            let z: f64 = w.iter().zip(&xi).map(|(a, b)| a * b).sum();
            c * Sigmoid::eval(z)
        });
        vals.push((n as f64).sqrt() * m);
    }
    let mean = vals.iter().sum::<f64>() / seeds as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mc: f64 = (0..1_000_000)
        .map(|_| {
            let c = law.sample(&mut rng);
            let z: f64 = xi.iter().map(|x| law.sample(&mut rng) * x).sum();
            (c * Sigmoid::eval(z)).powi(2)
        })
        .sum::<f64>()
        / 1e6;
    assert!((var / mc - 1.0).abs() < 0.05, "var {var} mc {mc}");
}

proptest! {
    #[test]
    fn snapshot_json_round_trip(seed in any::<u64>(), n in 1usize..20, d in 1usize..6, beta in 0.5f64..1.0) {
        let net = ScaledNetwork::init(n, beta, d, &InitLaw::default(), &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(ScaledNetwork::from_json(&net.to_json()).unwrap(), net);
    }
}
