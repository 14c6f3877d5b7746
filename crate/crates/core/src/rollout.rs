//! Batched environment stepping and the transition buffer it fills.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::nets::{gaussian_log_prob, Agent};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EpisodeStats {
    pub ret: f64,
    pub handholds: usize,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Set on the final transition of an episode.
    pub episode: Option<EpisodeStats>,
}

/// A resettable episodic environment with flat observation/action vectors.
pub trait Environment: Send {
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    fn reset(&mut self) -> Result<Vec<f64>>;
    fn observe(&self) -> Vec<f64>;
    /// Actions are clipped to `[-1, 1]` by the environment.
    fn step(&mut self, action: &[f64]) -> Result<Transition>;
    /// Statistics of the episode in progress.
    fn progress(&self) -> EpisodeStats;
}

/// Transitions stored time-major: row `t * n_envs + e`.
#[derive(Clone, Debug, PartialEq)]
pub struct RolloutBuffer {
    pub n_envs: usize,
    pub steps: usize,
    /// Normalised observations, exactly as the policy saw them.
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    /// `V_old` of the observation after the last step, per environment.
    pub bootstrap: Vec<f64>,
    pub episodes: Vec<EpisodeStats>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.n_envs * self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, t: usize, env: usize) -> usize {
        t * self.n_envs + env
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RolloutOptions {
    pub steps: usize,
    pub deterministic: bool,
    pub update_normalizer: bool,
}

/// Steps every environment `opts.steps` times, resetting finished episodes.
pub fn rollout_batch<E: Environment>(
    agent: &mut Agent,
    envs: &mut [E],
    current_obs: &mut [Vec<f64>],
    opts: RolloutOptions,
    rng: &mut Rng,
) -> Result<RolloutBuffer> {
    let n = envs.len();
    let obs_dim = agent.obs_dim();
    let act_dim = agent.act_dim();
    if current_obs.len() != n {
        return Err(Error::Shape {
            what: "observation batch",
            expected: n,
            got: current_obs.len(),
        });
    }
    for e in envs.iter() {
        if e.obs_dim() != obs_dim {
            return Err(Error::Shape {
                what: "environment observation",
                expected: obs_dim,
                got: e.obs_dim(),
            });
        }
        if e.act_dim() != act_dim {
            return Err(Error::Shape {
                what: "environment action",
                expected: act_dim,
                got: e.act_dim(),
            });
        }
    }

    let total = n * opts.steps;
    let mut buf = RolloutBuffer {
        n_envs: n,
        steps: opts.steps,
        obs: Array2::zeros((total, obs_dim)),
        actions: Array2::zeros((total, act_dim)),
        log_probs: Vec::with_capacity(total),
        rewards: Vec::with_capacity(total),
        values: Vec::with_capacity(total),
        dones: Vec::with_capacity(total),
        bootstrap: Vec::new(),
        episodes: Vec::new(),
    };
    let std = agent.actor.std();
    let log_std: Vec<f64> = agent.actor.log_std.to_vec();

    for t in 0..opts.steps {
        let raw = stack_rows(current_obs, obs_dim)?;
        if opts.update_normalizer {
            agent.normalizer.update(raw.view());
        }
        let normed = agent.normalizer.normalize_batch(raw.view());
        let means = agent.actor.means(normed.view())?;
        let values = agent.critic.values(normed.view())?;

        let mut actions = Vec::with_capacity(n);
        for e in 0..n {
            let mean = means.row(e);
            let a: Vec<f64> = if opts.deterministic {
                mean.to_vec()
            } else {
                mean.iter()
                    .zip(&std)
                    .map(|(&m, &s)| {
                        let eps: f64 = StandardNormal.sample(rng);
                        m + s * eps
                    })
                    .collect()
            };
            let lp = gaussian_log_prob(mean.as_slice().expect("row"), &log_std, &a);
            let row = t * n + e;
            buf.obs.row_mut(row).assign(&normed.row(e));
            buf.actions.row_mut(row).assign(&ndarray::ArrayView1::from(&a));
            buf.log_probs.push(lp);
            buf.values.push(values[e]);
            actions.push(a);
        }

        let results: Vec<Result<Transition>> = envs
            .par_iter_mut()
            .zip(actions.par_iter())
            .map(|(env, a)| env.step(a))
            .collect();
        for (e, res) in results.into_iter().enumerate() {
            let tr = res?;
            buf.rewards.push(tr.reward);
            buf.dones.push(tr.done);
            if let Some(ep) = tr.episode {
                buf.episodes.push(ep);
            }
            current_obs[e] = if tr.done { envs[e].reset()? } else { tr.obs };
        }
    }

    let raw = stack_rows(current_obs, obs_dim)?;
    let normed = agent.normalizer.normalize_batch(raw.view());
    buf.bootstrap = agent.critic.values(normed.view())?.to_vec();
    Ok(buf)
}

fn stack_rows(rows: &[Vec<f64>], dim: usize) -> Result<Array2<f64>> {
    let mut m = Array2::zeros((rows.len(), dim));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::Shape {
                what: "observation",
                expected: dim,
                got: r.len(),
            });
        }
        m.row_mut(i).assign(&ArrayView2::from_shape((1, dim), r).expect("row").row(0));
    }
    Ok(m)
}

/// Runs one deterministic episode per environment (no resets) and returns
/// their statistics. Environments that never finish within `max_steps` are
/// reported with the progress they made.
pub fn evaluate<E: Environment>(agent: &Agent, envs: &mut [E], max_steps: usize) -> Result<Vec<EpisodeStats>> {
    envs.par_iter_mut()
        .map(|env| {
            let mut obs = env.reset()?;
            for _ in 0..max_steps {
                let a = agent.act_deterministic(&obs)?;
                let tr = env.step(&a)?;
                if let Some(ep) = tr.episode {
                    return Ok(ep);
                }
                obs = tr.obs;
            }
            Ok(env.progress())
        })
        .collect()
}
