use mdp_core::{kernel, sample_index, seed::derive_seed, ChainKind, FiniteMdp, Kernel};
use networks::{softmax, InitLaw, ScaledNetwork, Sigmoid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Schedule, SnapshotSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub width_n: usize,
    pub beta: f64,
    /// Horizon in rescaled time; `floor(N T)` steps are taken.
    pub t_end: f64,
    pub seed: u64,
    /// Steps between snapshots; `None` means `max(1, N / 10)`.
    pub snapshot_stride: Option<usize>,
    pub alpha: f64,
    pub critic_law: InitLaw,
    pub actor_law: InitLaw,
}

impl TrainConfig {
    pub fn new(width_n: usize, beta: f64, t_end: f64, seed: u64) -> Self {
        TrainConfig {
            width_n,
            beta,
            t_end,
            seed,
            snapshot_stride: None,
            alpha: 1.0,
            critic_law: InitLaw::default(),
            actor_law: InitLaw::default(),
        }
    }

    pub fn stride(&self) -> usize {
        self.snapshot_stride.unwrap_or((self.width_n / 10).max(1)).max(1)
    }

    pub fn n_steps(&self) -> u64 {
        (self.width_n as f64 * self.t_end + 1e-9).floor().max(0.0) as u64
    }

    pub fn schedule(&self) -> Schedule {
        Schedule::new(self.alpha, self.width_n, self.beta)
    }
}

/// Networks, chain positions and the two chain generators.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub critic: ScaledNetwork,
    pub actor: ScaledNetwork,
    pub step_k: u64,
    pub critic_pair: usize,
    pub actor_pair: usize,
    pub critic_rng: ChaCha8Rng,
    pub actor_rng: ChaCha8Rng,
}

impl TrainerState {
    /// Fresh initialization; each network and each chain gets its own
    /// stream derived from `cfg.seed`. Both chains start from `rho0`.
    pub fn new(mdp: &FiniteMdp, cfg: &TrainConfig) -> Self {
        let d = mdp.input_dim();
        let mut r = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0]));
        let critic = ScaledNetwork::init(cfg.width_n, cfg.beta, d, &cfg.critic_law, &mut r);
        let mut r = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[1]));
        let actor = ScaledNetwork::init(cfg.width_n, cfg.beta, d, &cfg.actor_law, &mut r);
        let mut critic_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[2]));
        let mut actor_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[3]));
        let critic_pair = sample_index(mdp.rho0(), &mut critic_rng);
        let actor_pair = sample_index(mdp.rho0(), &mut actor_rng);
        TrainerState { critic, actor, step_k: 0, critic_pair, actor_pair, critic_rng, actor_rng }
    }
}

/// Step engine with precomputed kernels, sparse inputs and scratch buffers.
pub struct Trainer<'a> {
    mdp: &'a FiniteMdp,
    schedule: Schedule,
    standard: Kernel,
    auxiliary: Kernel,
    sparse: Vec<Vec<(usize, f64)>>,
    s_crit: Vec<f64>,
    s_act: Vec<Vec<f64>>,
}

impl<'a> Trainer<'a> {
    pub fn new(mdp: &'a FiniteMdp, schedule: Schedule) -> Self {
        let sparse = (0..mdp.n_pairs())
            .map(|p| mdp.input(p).iter().cloned().enumerate().filter(|(_, v)| *v != 0.0).collect())
            .collect();
        Trainer {
            mdp,
            schedule,
            standard: kernel(mdp, ChainKind::Standard),
            auxiliary: kernel(mdp, ChainKind::Auxiliary),
            sparse,
            s_crit: vec![0.0; schedule.width_n],
            s_act: vec![vec![0.0; schedule.width_n]; mdp.n_actions()],
        }
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    fn fill_sigmoids(net: &ScaledNetwork, input: &[(usize, f64)], out: &mut [f64]) {
        let d = net.dim();
        for (i, o) in out.iter_mut().enumerate() {
            let w = &net.inner[i * d..(i + 1) * d];
            let z: f64 = input.iter().map(|&(j, v)| w[j] * v).sum();
            *o = Sigmoid::eval(z);
        }
    }

    /// Network output at a pair.
    pub fn value(&self, net: &ScaledNetwork, pair: usize) -> f64 {
        let d = net.dim();
        let input = &self.sparse[pair];
        let mut acc = 0.0;
        for (c, w) in net.outer.iter().zip(net.inner.chunks_exact(d)) {
            let z: f64 = input.iter().map(|&(j, v)| w[j] * v).sum();
            acc += c * Sigmoid::eval(z);
        }
        acc * net.scale()
    }

    fn state_values(&self, net: &ScaledNetwork, x: usize) -> Vec<f64> {
        (0..self.mdp.n_actions()).map(|a| self.value(net, self.mdp.pair(x, a))).collect()
    }

    fn explore(&self, p: &[f64], eta: f64) -> Vec<f64> {
        let u = eta / p.len() as f64;
        softmax(p).into_iter().map(|f| u + (1.0 - eta) * f).collect()
    }

    /// One step of both chains and all four parameter blocks. Every quantity
    /// on the right-hand side is read from the networks before the update.
    pub fn step(&mut self, st: &mut TrainerState) {
        let mdp = self.mdp;
        let na = mdp.n_actions();
        let k = st.step_k;
        let eta = self.schedule.eta(k);
        let n = st.critic.width_n();
        let scale = st.critic.scale();

        let xi = st.critic_pair;
        Self::fill_sigmoids(&st.critic, &self.sparse[xi], &mut self.s_crit);
        let q_k: f64 = scale * st.critic.outer.iter().zip(&self.s_crit).map(|(c, s)| c * s).sum::<f64>();

        let tilde = st.actor_pair;
        let (xt, at) = mdp.split(tilde);
        let mut p_t = vec![0.0; na];
        for (a, pa) in p_t.iter_mut().enumerate() {
            Self::fill_sigmoids(&st.actor, &self.sparse[mdp.pair(xt, a)], &mut self.s_act[a]);
            *pa = scale * st.actor.outer.iter().zip(&self.s_act[a]).map(|(b, s)| b * s).sum::<f64>();
        }
        let f_t = softmax(&p_t);

        // critic chain
        let x1 = sample_index(self.standard.row(xi), &mut st.critic_rng);
        let p_x1 = if x1 == xt { p_t.clone() } else { self.state_values(&st.actor, x1) };
        let a1 = sample_index(&self.explore(&p_x1, eta), &mut st.critic_rng);
        let next = mdp.pair(x1, a1);

        // actor chain
        let xt1 = sample_index(self.auxiliary.row(tilde), &mut st.actor_rng);
        let p_xt1 = if xt1 == xt {
            p_t.clone()
        } else if xt1 == x1 {
            p_x1
        } else {
            self.state_values(&st.actor, xt1)
        };
        let at1 = sample_index(&self.explore(&p_xt1, eta), &mut st.actor_rng);
        let next_tilde = mdp.pair(xt1, at1);

        let q_next = if next == xi { q_k } else { self.value(&st.critic, next) };
        let q_tilde = if tilde == xi {
            q_k
        } else if tilde == next {
            q_next
        } else {
            self.value(&st.critic, tilde)
        };
        let td = mdp.reward(xi) + mdp.gamma() * q_next - q_k;

        // critic
        let d = st.critic.dim();
        let coef = self.schedule.alpha(k) * scale * td;
        if coef != 0.0 {
            for i in 0..n {
                let s = self.s_crit[i];
                let c_old = st.critic.outer[i];
                st.critic.outer[i] += coef * s;
                let g = coef * c_old * s * (1.0 - s);
                let w = &mut st.critic.inner[i * d..(i + 1) * d];
                for &(j, v) in &self.sparse[xi] {
                    w[j] += g * v;
                }
            }
        }

        // actor
        let coef = self.schedule.zeta(k) * scale * q_tilde;
        if coef != 0.0 && na > 1 {
            for i in 0..n {
                let mut fbar = 0.0;
                for a in 0..na {
                    fbar += f_t[a] * self.s_act[a][i];
                }
                let b_old = st.actor.outer[i];
                st.actor.outer[i] += coef * (self.s_act[at][i] - fbar);
                let w = &mut st.actor.inner[i * d..(i + 1) * d];
                for a in 0..na {
                    let s = self.s_act[a][i];
                    let weight = (if a == at { 1.0 } else { 0.0 }) - f_t[a];
                    let g = coef * b_old * weight * s * (1.0 - s);
                    for &(j, v) in &self.sparse[mdp.pair(xt, a)] {
                        w[j] += g * v;
                    }
                }
            }
        }

        st.critic_pair = next;
        st.actor_pair = next_tilde;
        st.step_k += 1;
    }

    /// Full `Q`, `P`, `f`, `g` tables at the current step.
    pub fn record(&self, st: &TrainerState, series: &mut SnapshotSeries) {
        let mdp = self.mdp;
        let na = mdp.n_actions();
        let q: Vec<f64> = (0..mdp.n_pairs()).map(|p| self.value(&st.critic, p)).collect();
        let p: Vec<f64> = (0..mdp.n_pairs()).map(|i| self.value(&st.actor, i)).collect();
        let eta = self.schedule.eta(st.step_k);
        let mut f = Vec::with_capacity(p.len());
        let mut g = Vec::with_capacity(p.len());
        for row in p.chunks(na) {
            let fr = softmax(row);
            g.extend(fr.iter().map(|v| eta / na as f64 + (1.0 - eta) * v));
            f.extend(fr);
        }
        series.push(st.step_k as f64 / self.schedule.width_n as f64, q, p, f, g);
    }
}

/// Single step through a throwaway engine.
pub fn sgd_step(state: &mut TrainerState, mdp: &FiniteMdp, schedule: &Schedule) {
    Trainer::new(mdp, *schedule).step(state);
}

/// Runs `floor(N T)` steps, snapshotting at `k = 0`, every `stride` steps,
/// and at the final step.
pub fn train(mdp: &FiniteMdp, cfg: &TrainConfig) -> SnapshotSeries {
    train_from(mdp, cfg, TrainerState::new(mdp, cfg)).0
}

/// As [`train`] from a given state; also returns the final state.
pub fn train_from(mdp: &FiniteMdp, cfg: &TrainConfig, mut st: TrainerState) -> (SnapshotSeries, TrainerState) {
    let mut engine = Trainer::new(mdp, cfg.schedule());
    let mut series = SnapshotSeries::new(mdp.n_states(), mdp.n_actions());
    let stride = cfg.stride() as u64;
    let steps = cfg.n_steps();
    engine.record(&st, &mut series);
    for _ in 0..steps {
        engine.step(&mut st);
        if st.step_k % stride == 0 || st.step_k == steps {
            engine.record(&st, &mut series);
        }
    }
    (series, st)
}
