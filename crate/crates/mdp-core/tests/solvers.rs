use mdp_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mdp(rng: &mut ChaCha8Rng, ns: usize, na: usize) -> FiniteMdp {
    let reward: Vec<f64> = (0..ns * na).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut transition = Vec::new();
    for _ in 0..ns * na {
        let row: Vec<f64> = (0..ns).map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = row.iter().sum();
        transition.extend(row.iter().map(|v| v / s));
    }
    let (se, ae) = Embedding::OneHot.matrices(ns, na);
    let rho0 = vec![1.0 / (ns * na) as f64; ns * na];
    FiniteMdp::new(ns, na, 0.9, reward, transition, rho0, se, ae).unwrap()
}

fn random_policy(rng: &mut ChaCha8Rng, ns: usize, na: usize) -> Policy {
    let mut probs = Vec::new();
    for _ in 0..ns {
        let row: Vec<f64> = (0..na).map(|_| rng.random::<f64>() + 0.01).collect();
        let s: f64 = row.iter().sum();
        probs.extend(row.iter().map(|v| v / s));
    }
    Policy::new(ns, na, probs).unwrap()
}

fn power_iteration(m: &nalgebra::DMatrix<f64>, iters: usize) -> Vec<f64> {
    let n = m.nrows();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..iters {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += v[i] * m[(i, j)];
            }
        }
        v = next;
    }
    v
}

fn value_iteration(mdp: &FiniteMdp, policy: &Policy, sweeps: usize) -> Vec<f64> {
    let na = mdp.n_actions();
    let mut q = vec![0.0; mdp.n_pairs()];
    for _ in 0..sweeps {
        let v: Vec<f64> = (0..mdp.n_states())
            .map(|x| (0..na).map(|a| policy.prob(x, a) * q[x * na + a]).sum())
            .collect();
        q = (0..mdp.n_pairs())
            .map(|i| {
                let next: f64 = mdp.transition_row(i).iter().zip(&v).map(|(p, vx)| p * vx).sum();
                mdp.reward(i) + mdp.gamma() * next
            })
            .collect();
    }
    q
}

fn policy_iteration(mdp: &FiniteMdp) -> Vec<usize> {
    let na = mdp.n_actions();
    let mut actions = vec![0usize; mdp.n_states()];
    loop {
        let q = value_function(mdp, &Policy::deterministic(na, &actions));
        let mut changed = false;
        for (x, act) in actions.iter_mut().enumerate() {
            let row = &q[x * na..(x + 1) * na];
            let best = (0..na).fold(*act, |b, a| if row[a] > row[b] + 1e-12 { a } else { b });
            if best != *act {
                *act = best;
                changed = true;
            }
        }
        if !changed {
            return actions;
        }
    }
}

#[test]
fn forest_tables_match_toolbox_enumeration() {
    let m = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    // wait
    assert_eq!(m.transition_row(m.pair(0, 0)), &[0.1, 0.9, 0.0]);
    assert_eq!(m.transition_row(m.pair(1, 0)), &[0.1, 0.0, 0.9]);
    assert_eq!(m.transition_row(m.pair(2, 0)), &[0.1, 0.0, 0.9]);
    // cut
    for x in 0..3 {
        assert_eq!(m.transition_row(m.pair(x, 1)), &[1.0, 0.0, 0.0]);
    }
    assert_eq!(m.rewards(), &[0.0, 0.0, 0.0, 0.25, 1.0, 0.5]);
    assert!((m.gamma() - 0.7).abs() < 1e-15);
}

#[test]
fn forest_two_states() {
    let m = build_forest(2, 1.0, 1.0, 0.5).unwrap();
    assert_eq!(m.transition_row(m.pair(0, 0)), &[0.5, 0.5]);
}

#[test]
fn forest_rejects_bad_input() {
    let e = build_forest(1, 4.0, 2.0, 0.1).unwrap_err().to_string();
    assert!(e.contains("n_states"), "{e}");
    let e = build_forest(3, 4.0, 2.0, 1.0).unwrap_err().to_string();
    assert!(e.contains("p_fire"), "{e}");
}

#[test]
fn constructor_rejects_unbounded_reward() {
    let m = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let mut raw: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
    raw["reward"][0] = serde_json::json!(1.5);
    let e = FiniteMdp::from_json(&raw.to_string()).unwrap_err().to_string();
    assert!(e.contains("reward"), "{e}");
}

#[test]
fn auxiliary_kernel_examples() {
    let m = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let aux = kernel(&m, ChainKind::Auxiliary);
    // cut goes to state 0 deterministically
    let row = aux.row(m.pair(1, 1));
    assert!((row[0] - 0.8).abs() < 1e-15);
    assert!((row[1] - 0.1).abs() < 1e-15 && (row[2] - 0.1).abs() < 1e-15);
    let rho = m.rho0_states();
    for r in aux.as_slice().chunks(3) {
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (p, q) in r.iter().zip(&rho) {
            assert!(*p >= (1.0 - m.gamma()) * q - 1e-15);
        }
    }
    let near_one = m.clone().with_gamma(1.0 - 1e-12).unwrap();
    let a = kernel(&near_one, ChainKind::Auxiliary);
    let s = kernel(&near_one, ChainKind::Standard);
    for (p, q) in a.as_slice().iter().zip(s.as_slice()) {
        assert!((p - q).abs() < 1e-10);
    }
}

#[test]
fn step_is_deterministic_and_degenerate_cases_are_exact() {
    let m = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let cut = Policy::deterministic(2, &[1, 1, 1]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    assert_eq!(step(&m, ChainKind::Standard, &cut, m.pair(2, 1), &mut rng), m.pair(0, 1));

    let f = Policy::uniform(3, 2);
    let run = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = 0;
        (0..200).map(|_| {
            s = step(&m, ChainKind::Auxiliary, &f, s, &mut rng);
            s
        })
        .collect::<Vec<_>>()
    };
    assert_eq!(run(9), run(9));
}

#[test]
fn long_run_frequencies_match_stationary_law() {
    let m = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let f = Policy::new(3, 2, vec![0.7, 0.3, 0.4, 0.6, 0.5, 0.5]).unwrap();
    for kind in [ChainKind::Standard, ChainKind::Auxiliary] {
        let pi = stationary_distribution(&m, kind, &f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = vec![0usize; 6];
        let mut s = 0;
        let n = 1_000_000;
        for _ in 0..n {
            s = step(&m, kind, &f, s, &mut rng);
            counts[s] += 1;
        }
        let tv: f64 = counts.iter().zip(&pi).map(|(c, p)| (*c as f64 / n as f64 - p).abs()).sum::<f64>() / 2.0;
        assert!(tv < 1e-2, "{kind:?} tv {tv}");
    }
}

#[test]
fn stationary_simple_cases() {
    // 2-cycle
    let m = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let s = StationarySolver::new(&m).unwrap();
    assert!((s.stationary()[0] - 0.5).abs() < 1e-14);

    // doubly stochastic kernel with uniform policy
    let ns = 3;
    let mut transition = vec![0.0; ns * 2 * ns];
    for x in 0..ns {
        for a in 0..2 {
            transition[(x * 2 + a) * ns + (x + a + 1) % ns] = 1.0;
        }
    }
    let (se, ae) = Embedding::OneHot.matrices(ns, 2);
    let mdp = FiniteMdp::new(ns, 2, 0.5, vec![0.0; 6], transition, vec![1.0 / 6.0; 6], se, ae).unwrap();
    let pi = stationary_distribution(&mdp, ChainKind::Standard, &Policy::uniform(ns, 2)).unwrap();
    for p in pi {
        assert!((p - 1.0 / 6.0).abs() < 1e-12);
    }
}

#[test]
fn reducible_chain_is_rejected() {
    let m = nalgebra::DMatrix::<f64>::identity(3, 3);
    let e = StationarySolver::new(&m).unwrap_err();
    assert_eq!(e.to_string(), "chain not ergodic under policy");
}

#[test]
fn stationary_matches_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let mdp = random_mdp(&mut rng, 3, 2);
        let f = random_policy(&mut rng, 3, 2);
        let m = pair_transition(&mdp, ChainKind::Standard, &f);
        let pi = stationary_distribution(&mdp, ChainKind::Standard, &f).unwrap();
        let oracle = power_iteration(&m, 100_000);
        for (a, b) in pi.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(pi.iter().all(|p| *p > 0.0));
    }
}

#[test]
fn perturbation_solve_inverts_the_shifted_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mdp = random_mdp(&mut rng, 3, 2);
    let f = random_policy(&mut rng, 3, 2);
    let m = pair_transition(&mdp, ChainKind::Standard, &f);
    let s = StationarySolver::new(&m).unwrap();
    let b: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
    let y = s.solve_row(&b);
    for j in 0..6 {
        let mut lhs = y[j];
        for i in 0..6 {
            lhs += -y[i] * m[(i, j)] + y[i] * s.stationary()[j];
        }
        assert!((lhs - b[j]).abs() < 1e-12);
    }
}

#[test]
fn value_function_examples() {
    let one = FiniteMdp::new(1, 1, 0.7, vec![1.0], vec![1.0], vec![1.0], vec![0.0], vec![0.0]).unwrap();
    let v = value_function(&one, &Policy::uniform(1, 1));
    assert!((v[0] - 10.0 / 3.0).abs() < 1e-12);
    assert!((expected_reward(&one, &Policy::uniform(1, 1)) - 10.0 / 3.0).abs() < 1e-12);

    let m = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let (se, ae) = Embedding::OneHot.matrices(3, 2);
    let zero = FiniteMdp::new(3, 2, 0.7, vec![0.0; 6], m.transitions().to_vec(), m.rho0().to_vec(), se, ae).unwrap();
    assert!(value_function(&zero, &Policy::uniform(3, 2)).iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn forest_value_and_policy_match_iterative_oracles() {
    let m = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let star = optimal_policy(&m);
    let v = value_function(&m, &star);
    let oracle = value_iteration(&m, &star, 10_000);
    for (a, b) in v.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-8);
    }
    let pi_actions = policy_iteration(&m);
    assert_eq!(star, Policy::deterministic(2, &pi_actions));
    let uniform = Policy::uniform(3, 2);
    assert!(expected_reward(&m, &star) >= expected_reward(&m, &uniform));
    let always_cut = Policy::deterministic(2, &[1, 1, 1]);
    assert!(expected_reward(&m, &star) > expected_reward(&m, &always_cut));
}

#[test]
fn optimal_policy_ties_go_to_action_zero() {
    let (se, ae) = Embedding::OneHot.matrices(2, 3);
    let transition = vec![0.5; 12];
    let reward = vec![0.3, 0.3, 0.3, -0.2, -0.2, -0.2];
    let m = FiniteMdp::new(2, 3, 0.9, reward, transition, vec![1.0 / 6.0; 6], se, ae).unwrap();
    assert_eq!(optimal_policy(&m), Policy::deterministic(3, &[0, 0]));
}

#[test]
fn point_mass_rho0_reads_one_value() {
    let m = build_forest(3, 4.0, 2.0, 0.1).unwrap();
    let mut rho = vec![0.0; 6];
    rho[4] = 1.0;
    let m = m.with_rho0(rho).unwrap();
    let f = Policy::uniform(3, 2);
    assert!((expected_reward(&m, &f) - value_function(&m, &f)[4]).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(seed in any::<u64>(), ns in 1usize..5, na in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mdp(&mut rng, ns, na);
        let back = FiniteMdp::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn bellman_residual_and_optimality(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mdp(&mut rng, 4, 3);
        let f = random_policy(&mut rng, 4, 3);
        let v = value_function(&m, &f);
        for i in 0..m.n_pairs() {
            let next: f64 = (0..4)
                .map(|x| m.transition_row(i)[x] * (0..3).map(|a| f.prob(x, a) * v[x * 3 + a]).sum::<f64>())
                .sum();
            prop_assert!((m.reward(i) + m.gamma() * next - v[i]).abs() < 1e-10);
        }
        let star = optimal_policy(&m);
        prop_assert!(expected_reward(&m, &star) >= expected_reward(&m, &f) - 1e-12);
    }

    #[test]
    fn stationary_fixed_point(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mdp(&mut rng, 3, 3);
        let f = random_policy(&mut rng, 3, 3);
        for kind in [ChainKind::Standard, ChainKind::Auxiliary] {
            let pm = pair_transition(&m, kind, &f);
            let pi = stationary_distribution(&m, kind, &f).unwrap();
            prop_assert!(pi.iter().all(|p| *p > 0.0));
            for j in 0..9 {
                let s: f64 = (0..9).map(|i| pi[i] * pm[(i, j)]).sum();
                prop_assert!((s - pi[j]).abs() < 1e-10);
            }
        }
    }
}
