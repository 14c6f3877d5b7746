//! Proximal policy optimisation with separately optimised actor and critic.
//!
//! Returns are bootstrapped discounted sums (no GAE); the advantage is the
//! return minus the rollout-time value estimate, normalised per iteration.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::nets::{Agent, Policy, PolicyGrads};
use crate::rng::{self, Rng};
use crate::rollout::{rollout_batch, Environment, EpisodeStats, RolloutBuffer, RolloutOptions};

pub use crate::rollout::RolloutBuffer as Trajectories;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr_init: f64,
    pub lr_final: f64,
    pub minibatch: usize,
    pub epochs: usize,
    pub gamma: f64,
    pub clip: f64,
    pub max_grad_norm: f64,
    pub entropy_coef: f64,
    pub total_samples: usize,
    pub samples_per_iter: usize,
    pub n_envs: usize,
    pub normalize_advantages: bool,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Point-mass stage: 80,000 samples per iteration.
    pub fn simple() -> Self {
        TrainConfig {
            lr_init: 3e-4,
            lr_final: 3e-5,
            minibatch: 2000,
            epochs: 10,
            gamma: 0.99,
            clip: 0.2,
            max_grad_norm: 2.0,
            entropy_coef: 0.0,
            total_samples: 25_000_000,
            samples_per_iter: 80_000,
            n_envs: 1000,
            normalize_advantages: true,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }

    /// Articulated stage: 40,000 samples per iteration over 125 environments.
    pub fn full() -> Self {
        TrainConfig {
            samples_per_iter: 40_000,
            n_envs: 125,
            ..Self::simple()
        }
    }

    pub fn steps_per_env(&self) -> usize {
        self.samples_per_iter / self.n_envs
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.lr_init,
            self.lr_final,
            self.gamma,
            self.clip,
            self.max_grad_norm,
            self.adam_eps,
        ];
        if positive.iter().any(|&v| !(v > 0.0)) || self.entropy_coef < 0.0 {
            return Err(Error::config("training hyperparameters must be positive"));
        }
        if self.gamma >= 1.0 {
            return Err(Error::config("discount must be below 1"));
        }
        if self.minibatch == 0 || self.epochs == 0 || self.n_envs == 0 || self.total_samples == 0 {
            return Err(Error::config("batch sizes and sample budget must be non-zero"));
        }
        if !self.samples_per_iter.is_multiple_of(self.n_envs) || self.samples_per_iter < self.n_envs {
            return Err(Error::config(format!(
                "samples per iteration ({}) must be a multiple of the environment count ({})",
                self.samples_per_iter, self.n_envs
            )));
        }
        Ok(())
    }
}

/// Exponential schedule from `lr_init` (progress 0) to `lr_final` (progress 1).
pub fn anneal_lr(cfg: &TrainConfig, progress: f64) -> f64 {
    let p = progress.clamp(0.0, 1.0);
    cfg.lr_init * (cfg.lr_final / cfg.lr_init).powf(p)
}

/// Backward recursion `R_t = r_t + γ R_{t+1}` for one environment column;
/// `R` restarts at terminal steps and starts from `bootstrap` at the horizon.
pub fn discounted_returns(rewards: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut next = bootstrap;
    for t in (0..rewards.len()).rev() {
        next = if dones[t] { rewards[t] } else { rewards[t] + gamma * next };
        out[t] = next;
    }
    out
}

/// Returns and advantages for a time-major buffer.
pub fn compute_returns(buf: &RolloutBuffer, gamma: f64, normalize: bool) -> (Vec<f64>, Vec<f64>) {
    let n = buf.n_envs;
    let mut returns = vec![0.0; buf.len()];
    let mut col_r = vec![0.0; buf.steps];
    let mut col_d = vec![false; buf.steps];
    for e in 0..n {
        for t in 0..buf.steps {
            col_r[t] = buf.rewards[t * n + e];
            col_d[t] = buf.dones[t * n + e];
        }
        let r = discounted_returns(&col_r, &col_d, buf.bootstrap[e], gamma);
        for t in 0..buf.steps {
            returns[t * n + e] = r[t];
        }
    }
    let mut adv: Vec<f64> = returns.iter().zip(&buf.values).map(|(r, v)| r - v).collect();
    if normalize {
        normalize_in_place(&mut adv);
    }
    (returns, adv)
}

fn normalize_in_place(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    for v in x.iter_mut() {
        *v = (*v - mean) / std;
    }
}

/// `min(ρ·Â, clip(ρ, 1-ε, 1+ε)·Â)`.
pub fn clipped_objective(ratio: f64, adv: f64, eps: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv)
}

/// Whether the unclipped branch carries the gradient.
fn unclipped_active(ratio: f64, adv: f64, eps: f64) -> bool {
    (ratio >= 1.0 - eps && ratio <= 1.0 + eps)
        || ratio * adv < ratio.clamp(1.0 - eps, 1.0 + eps) * adv
}

/// A minibatch view of a buffer.
pub struct Batch<'a> {
    pub obs: &'a Array2<f64>,
    pub actions: &'a Array2<f64>,
    pub log_probs_old: &'a [f64],
    pub advantages: &'a [f64],
}

/// Mean clipped surrogate (to be maximised) and the importance ratios.
pub fn surrogate_loss(policy: &Policy, batch: &Batch<'_>, eps: f64) -> Result<(f64, Vec<f64>)> {
    let (lp, _) = policy.log_probs(batch.obs.view(), batch.actions.view())?;
    let ratios: Vec<f64> = lp
        .iter()
        .zip(batch.log_probs_old)
        .map(|(new, old)| (new - old).exp())
        .collect();
    let total: f64 = ratios
        .iter()
        .zip(batch.advantages)
        .map(|(&r, &a)| clipped_objective(r, a, eps))
        .sum();
    Ok((total / ratios.len() as f64, ratios))
}

/// Surrogate value, ratios, and the gradient of the *negated* surrogate.
pub fn surrogate_grad(policy: &Policy, batch: &Batch<'_>, eps: f64) -> Result<(f64, Vec<f64>, PolicyGrads)> {
    let (lp, cache) = policy.log_probs(batch.obs.view(), batch.actions.view())?;
    let b = lp.len() as f64;
    let mut total = 0.0;
    let mut ratios = Vec::with_capacity(lp.len());
    let mut coeffs = Vec::with_capacity(lp.len());
    for ((new, old), &a) in lp.iter().zip(batch.log_probs_old).zip(batch.advantages) {
        let r = (new - old).exp();
        total += clipped_objective(r, a, eps);
        coeffs.push(if unclipped_active(r, a, eps) { -a * r / b } else { 0.0 });
        ratios.push(r);
    }
    let grads = policy.log_prob_grad(&cache, batch.actions.view(), &coeffs);
    Ok((total / b, ratios, grads))
}

/// Rescales gradients in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [&mut [f64]], max_norm: f64) -> f64 {
    let norm = grads
        .iter()
        .flat_map(|s| s.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for s in grads.iter_mut() {
            for g in s.iter_mut() {
                *g *= scale;
            }
        }
    }
    norm
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(shapes: &[usize], beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            beta1,
            beta2,
            eps,
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn for_params(params: &[&mut [f64]], cfg: &TrainConfig) -> Self {
        let shapes: Vec<usize> = params.iter().map(|p| p.len()).collect();
        Adam::new(&shapes, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
    }

    /// Gradient-descent step (minimises).
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: &[&[f64]], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, p) in params.into_iter().enumerate() {
            let g = grads[k];
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                p[i] -= lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

/// Adam state for the actor and the critic.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimizers {
    pub actor: Adam,
    pub critic: Adam,
}

impl Optimizers {
    pub fn new(agent: &mut Agent, cfg: &TrainConfig) -> Self {
        Optimizers {
            actor: Adam::for_params(&agent.actor.params_mut(), cfg),
            critic: Adam::for_params(&agent.critic.net.params_mut(), cfg),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub grad_steps: usize,
    /// `max |ρ - 1|` over the first minibatch of the first epoch.
    pub first_step_ratio_dev: f64,
    pub clip_fraction: f64,
}

/// Ten epochs of shuffled minibatch updates on one buffer.
pub fn train_iteration(
    agent: &mut Agent,
    opt: &mut Optimizers,
    buf: &RolloutBuffer,
    cfg: &TrainConfig,
    lr: f64,
    rng: &mut Rng,
) -> Result<IterationStats> {
    let snapshot = (agent.clone(), opt.clone());
    let res = train_iteration_inner(agent, opt, buf, cfg, lr, rng);
    if res.is_err() {
        *agent = snapshot.0;
        *opt = snapshot.1;
    }
    res
}

fn train_iteration_inner(
    agent: &mut Agent,
    opt: &mut Optimizers,
    buf: &RolloutBuffer,
    cfg: &TrainConfig,
    lr: f64,
    rng: &mut Rng,
) -> Result<IterationStats> {
    let (returns, adv) = compute_returns(buf, cfg.gamma, cfg.normalize_advantages);
    let mut idx: Vec<usize> = (0..buf.len()).collect();
    let mut stats = IterationStats::default();
    let (mut pl_sum, mut vl_sum, mut clipped, mut seen) = (0.0, 0.0, 0usize, 0usize);

    for epoch in 0..cfg.epochs {
        idx.shuffle(rng);
        for (mb, chunk) in idx.chunks(cfg.minibatch).enumerate() {
            let obs = buf.obs.select(Axis(0), chunk);
            let actions = buf.actions.select(Axis(0), chunk);
            let lp_old: Vec<f64> = chunk.iter().map(|&i| buf.log_probs[i]).collect();
            let a: Vec<f64> = chunk.iter().map(|&i| adv[i]).collect();
            let ret: Vec<f64> = chunk.iter().map(|&i| returns[i]).collect();
            let batch = Batch {
                obs: &obs,
                actions: &actions,
                log_probs_old: &lp_old,
                advantages: &a,
            };

            let (surr, ratios, mut pg) = surrogate_grad(&agent.actor, &batch, cfg.clip)?;
            if epoch == 0 && mb == 0 {
                stats.first_step_ratio_dev = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
            }
            clipped += ratios.iter().filter(|r| (*r - 1.0).abs() > cfg.clip).count();
            seen += ratios.len();

            let (vloss, mut vg) = value_loss_grad(agent, &obs, &ret)?;
            if !surr.is_finite() || !vloss.is_finite() {
                return Err(Error::NonFiniteLoss);
            }

            clip_grad_norm(&mut pg.slices_mut(), cfg.max_grad_norm);
            let pgs = pg.slices();
            opt.actor.step(agent.actor.params_mut(), &pgs, lr);

            clip_grad_norm(&mut vg.slices_mut(), cfg.max_grad_norm);
            let vgs = vg.slices();
            opt.critic.step(agent.critic.net.params_mut(), &vgs, lr);

            pl_sum += -surr;
            vl_sum += vloss;
            stats.grad_steps += 1;
        }
    }
    if !agent.actor.is_finite() || !agent.critic.net.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    stats.policy_loss = pl_sum / stats.grad_steps as f64;
    stats.value_loss = vl_sum / stats.grad_steps as f64;
    stats.clip_fraction = clipped as f64 / seen.max(1) as f64;
    Ok(stats)
}

/// Mean squared error to the returns and its gradient.
pub fn value_loss_grad(
    agent: &Agent,
    obs: &Array2<f64>,
    returns: &[f64],
) -> Result<(f64, crate::nets::MlpGrads)> {
    let cache = agent.critic.net.forward_cached(obs.view())?;
    let v = cache.output().column(0).to_owned();
    let b = returns.len() as f64;
    let diff: Array1<f64> = &v - &Array1::from(returns.to_vec());
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / b;
    let d_out = (diff * (2.0 / b)).insert_axis(Axis(1));
    let (grads, _) = agent.critic.net.backward(&cache, d_out);
    Ok((loss, grads))
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog {
    pub iter: usize,
    pub samples: usize,
    pub mean_ep_reward: f64,
    pub mean_handholds: f64,
    pub lr: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub std: f64,
}

impl IterationLog {
    pub const HEADER: &'static str = "iter\tsamples\tmean_ep_reward\tmean_handholds\tlr\tpolicy_loss\tvalue_loss\tstd";

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{:.6}\t{:.4}\t{:.6e}\t{:.6}\t{:.6}\t{:.6}",
            self.iter,
            self.samples,
            self.mean_ep_reward,
            self.mean_handholds,
            self.lr,
            self.policy_loss,
            self.value_loss,
            self.std
        )
    }
}

/// Collect/optimise loop over a batch of environments.
pub struct Trainer<E: Environment> {
    pub agent: Agent,
    pub envs: Vec<E>,
    pub cfg: TrainConfig,
    pub opt: Optimizers,
    pub samples: usize,
    pub iter: usize,
    obs: Vec<Vec<f64>>,
    rng: Rng,
}

impl<E: Environment> Trainer<E> {
    pub fn new(mut agent: Agent, mut envs: Vec<E>, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if envs.len() != cfg.n_envs {
            return Err(Error::Shape {
                what: "environment count",
                expected: cfg.n_envs,
                got: envs.len(),
            });
        }
        let obs = envs.iter_mut().map(|e| e.reset()).collect::<Result<Vec<_>>>()?;
        let opt = Optimizers::new(&mut agent, &cfg);
        let rng = rng::stream(cfg.seed, u64::MAX);
        Ok(Trainer {
            agent,
            envs,
            cfg,
            opt,
            samples: 0,
            iter: 0,
            obs,
            rng,
        })
    }

    pub fn done(&self) -> bool {
        self.samples >= self.cfg.total_samples
    }

    /// Collects one buffer and optimises on it.
    pub fn iterate(&mut self) -> Result<(IterationLog, IterationStats)> {
        let lr = anneal_lr(&self.cfg, self.samples as f64 / self.cfg.total_samples as f64);
        let opts = RolloutOptions {
            steps: self.cfg.steps_per_env(),
            deterministic: false,
            update_normalizer: true,
        };
        let buf = rollout_batch(&mut self.agent, &mut self.envs, &mut self.obs, opts, &mut self.rng)?;
        self.samples += buf.len();
        let stats = train_iteration(&mut self.agent, &mut self.opt, &buf, &self.cfg, lr, &mut self.rng)?;
        self.iter += 1;

        let episodes: Vec<EpisodeStats> = if buf.episodes.is_empty() {
            self.envs.iter().map(|e| e.progress()).collect()
        } else {
            buf.episodes.clone()
        };
        let n = episodes.len().max(1) as f64;
        let std = self.agent.actor.std();
        let log = IterationLog {
            iter: self.iter,
            samples: self.samples,
            mean_ep_reward: episodes.iter().map(|e| e.ret).sum::<f64>() / n,
            mean_handholds: episodes.iter().map(|e| e.handholds as f64).sum::<f64>() / n,
            lr,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            std: std.iter().sum::<f64>() / std.len() as f64,
        };
        Ok((log, stats))
    }

    /// Runs until the sample budget is spent, reporting every iteration.
    pub fn run(&mut self, mut on_iter: impl FnMut(&Self, &IterationLog) -> Result<()>) -> Result<()> {
        while !self.done() {
            let (log, _) = self.iterate()?;
            on_iter(self, &log)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{Activation, MlpSpec};
    use rand::Rng as _;

    #[test]
    fn anneal_schedule() {
        let cfg = TrainConfig::simple();
        assert!((anneal_lr(&cfg, 0.0) - 3e-4).abs() < 1e-15);
        assert!((anneal_lr(&cfg, 1.0) - 3e-5).abs() < 1e-15);
        assert!((anneal_lr(&cfg, 0.5) - 9.4868e-5).abs() < 1e-9);
    }

    #[test]
    fn returns_examples() {
        let r = discounted_returns(&[1.0, 1.0], &[false, false], 10.0, 0.99);
        assert!((r[0] - 11.791).abs() < 1e-12 && (r[1] - 10.9).abs() < 1e-12);
        let r = discounted_returns(&[0.0, 1.0], &[false, true], 123.0, 0.99);
        assert!((r[0] - 0.99).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
    }

    fn brute_force(rewards: &[f64], dones: &[bool], bootstrap: f64, gamma: f64, t: usize) -> f64 {
        let mut total = 0.0;
        let mut k = 0;
        loop {
            let i = t + k;
            if i == rewards.len() {
                return total + gamma.powi(k as i32) * bootstrap;
            }
            total += gamma.powi(k as i32) * rewards[i];
            if dones[i] {
                return total;
            }
            k += 1;
        }
    }

    #[test]
    fn returns_match_brute_force() {
        let mut rng = rng::seeded(77);
        for _ in 0..200 {
            let n = 50;
            let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
            let dones: Vec<bool> = (0..n).map(|_| rng.random_bool(0.05)).collect();
            let boot = rng.random_range(-5.0..5.0);
            let r = discounted_returns(&rewards, &dones, boot, 0.99);
            for (t, &rt) in r.iter().enumerate() {
                assert!((rt - brute_force(&rewards, &dones, boot, 0.99, t)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn raw_advantage_zero_when_values_are_returns() {
        let mut buf = tiny_buffer(3, 4, 1);
        let (ret, _) = compute_returns(&buf, 0.99, false);
        buf.values = ret;
        let (_, adv) = compute_returns(&buf, 0.99, false);
        assert!(adv.iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn clip_examples() {
        assert!((clipped_objective(1.3, 1.0, 0.2) - 1.2).abs() < 1e-12);
        assert!((clipped_objective(0.5, -1.0, 0.2) + 0.8).abs() < 1e-12);
        assert_eq!(clipped_objective(1.0, 0.7, 0.2), 0.7);
        let mut rng = rng::seeded(1);
        for _ in 0..10_000 {
            let r = rng.random_range(0.0..3.0);
            let a = rng.random_range(-3.0..3.0);
            assert!(clipped_objective(r, a, 0.2) <= r * a + 1e-15);
        }
    }

    #[test]
    fn grad_norm_clipping_scales() {
        let mut a = [3.0, 0.0];
        let mut b = [4.0];
        let norm = clip_grad_norm(&mut [&mut a[..], &mut b[..]], 2.0);
        assert!((norm - 5.0).abs() < 1e-12);
        assert!((a[0] - 1.2).abs() < 1e-12 && (b[0] - 1.6).abs() < 1e-12);
        let mut c = [0.3];
        clip_grad_norm(&mut [&mut c[..]], 2.0);
        assert_eq!(c[0], 0.3);
    }

    fn tiny_buffer(n_envs: usize, steps: usize, seed: u64) -> RolloutBuffer {
        let mut rng = rng::seeded(seed);
        let total = n_envs * steps;
        RolloutBuffer {
            n_envs,
            steps,
            obs: Array2::from_shape_simple_fn((total, 3), || rng.random_range(-1.0..1.0)),
            actions: Array2::from_shape_simple_fn((total, 2), || rng.random_range(-1.0..1.0)),
            log_probs: vec![0.0; total],
            rewards: (0..total).map(|i| (i % 3) as f64).collect(),
            values: vec![0.5; total],
            dones: (0..total).map(|i| i % 5 == 4).collect(),
            bootstrap: vec![1.0; n_envs],
            episodes: Vec::new(),
        }
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = [1.0, -2.0];
        let mut adam = Adam::new(&[2], 0.9, 0.999, 1e-8);
        adam.step(vec![&mut p[..]], &[&[0.5, -3.0]], 0.1);
        assert!((p[0] - 0.9).abs() < 1e-6 && (p[1] + 1.9).abs() < 1e-6);
    }

    #[test]
    fn zero_advantages_leave_actor_unchanged() {
        let spec_a = MlpSpec::new(vec![3, 16, 2], vec![Activation::Relu, Activation::Tanh]).unwrap();
        let spec_c = MlpSpec::new(vec![3, 16, 1], vec![Activation::Relu, Activation::Linear]).unwrap();
        let mut agent = Agent::new("t", &spec_a, &spec_c, 3).unwrap();
        let mut buf = tiny_buffer(4, 10, 2);
        // log-probs consistent with the current actor
        let (lp, _) = agent.actor.log_probs(buf.obs.view(), buf.actions.view()).unwrap();
        buf.log_probs = lp.to_vec();
        buf.rewards = vec![0.0; 40];
        buf.values = vec![0.0; 40];
        buf.bootstrap = vec![0.0; 4];
        let cfg = TrainConfig {
            minibatch: 8,
            epochs: 3,
            n_envs: 4,
            samples_per_iter: 40,
            ..TrainConfig::simple()
        };
        let before = agent.actor.clone();
        let mut opt = Optimizers::new(&mut agent, &cfg);
        let stats = train_iteration(&mut agent, &mut opt, &buf, &cfg, 3e-4, &mut rng::seeded(0)).unwrap();
        assert_eq!(stats.grad_steps, 15);
        assert_eq!(stats.first_step_ratio_dev, 0.0);
        let max_delta = before
            .net
            .params()
            .iter()
            .zip(agent.actor.net.params())
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        assert!(max_delta < 1e-7, "{max_delta}");
    }

    #[test]
    fn gradient_step_count() {
        let cfg = TrainConfig::simple();
        assert_eq!(cfg.samples_per_iter / cfg.minibatch * cfg.epochs, 400);
        assert_eq!(cfg.steps_per_env(), 80);
        assert_eq!(TrainConfig::full().steps_per_env(), 320);
    }
}
