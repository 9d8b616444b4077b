//! Trajectory collection and advantage estimation.
//!
//! A `RolloutBuffer` holds `n_steps` transitions from each of `n_envs`
//! parallel environments. All per-step arrays are stored flat in time-major
//! order: entry for (step t, env e) sits at `t * n_envs + e`, so flattening
//! a buffer into a training batch is the identity on storage.
//!
//! `dones[t]` means the episode ended *after* step t; the value bootstrap
//! for that step is masked out. Environments auto-reset inside `collect`,
//! so the final observation of a done step is the next episode's start.

use crate::env::EnvState;
use crate::error::Result;
use crate::gaussian;
use crate::nn::ActorCritic;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RolloutBuffer {
    pub n_steps: usize,
    pub n_envs: usize,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub observations: Vec<f64>,
    pub actions: Vec<f64>,
    pub logprobs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub values: Vec<f64>,
    /// Value of each environment's observation after the last step.
    pub bootstrap_value: Vec<f64>,
}

impl RolloutBuffer {
    /// Flat position of (step, env) in the per-step arrays.
    pub fn flat_index(&self, t: usize, e: usize) -> usize {
        debug_assert!(t < self.n_steps && e < self.n_envs);
        t * self.n_envs + e
    }

    pub fn len(&self) -> usize {
        self.n_steps * self.n_envs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn obs(&self, t: usize, e: usize) -> &[f64] {
        let i = self.flat_index(t, e) * self.obs_dim;
        &self.observations[i..i + self.obs_dim]
    }

    pub fn action(&self, t: usize, e: usize) -> &[f64] {
        let i = self.flat_index(t, e) * self.act_dim;
        &self.actions[i..i + self.act_dim]
    }

    pub fn obs_flat(&self, flat: usize) -> &[f64] {
        &self.observations[flat * self.obs_dim..(flat + 1) * self.obs_dim]
    }

    pub fn action_flat(&self, flat: usize) -> &[f64] {
        &self.actions[flat * self.act_dim..(flat + 1) * self.act_dim]
    }
}

/// Raw advantages and the value predictions they were computed against,
/// flattened time-major like the buffer.
#[derive(Debug, Clone)]
pub struct AdvantageBatch {
    pub advantages: Vec<f64>,
    pub old_values: Vec<f64>,
}

/// Run the stochastic policy for `n_steps` in every environment.
///
/// Per step, environments are visited in index order and actions drawn from
/// `action_rng` (mean + std * z), so a fixed generator state fixes the whole
/// rollout. Stored log-probabilities are taken at the sampled action under
/// the collection-time parameters.
pub fn collect(
    model: &ActorCritic,
    envs: &mut [EnvState],
    n_steps: usize,
    action_rng: &mut ChaCha8Rng,
) -> Result<RolloutBuffer> {
    let n_envs = envs.len();
    let obs_dim = model.obs_dim;
    let act_dim = model.act_dim;
    let n = n_steps * n_envs;
    let mut buf = RolloutBuffer {
        n_steps,
        n_envs,
        obs_dim,
        act_dim,
        observations: Vec::with_capacity(n * obs_dim),
        actions: Vec::with_capacity(n * act_dim),
        logprobs: Vec::with_capacity(n),
        rewards: Vec::with_capacity(n),
        dones: Vec::with_capacity(n),
        values: Vec::with_capacity(n),
        bootstrap_value: Vec::with_capacity(n_envs),
    };
    let log_std = model.log_std().to_vec();
    for _t in 0..n_steps {
        for env in envs.iter_mut() {
            let obs = env.observation();
            let mean = model.policy_mean(&obs);
            let action = gaussian::sample(&mean, &log_std, action_rng);
            let logp = gaussian::log_prob(&mean, &log_std, &action);
            let value = model.value_of(&obs);
            let step = env.step(&action)?;
            buf.observations.extend_from_slice(&obs);
            buf.actions.extend_from_slice(&action);
            buf.logprobs.push(logp);
            buf.rewards.push(step.reward);
            buf.dones.push(step.done);
            buf.values.push(value);
            if step.done {
                env.reset();
            }
        }
    }
    for env in envs.iter() {
        buf.bootstrap_value.push(model.value_of(&env.observation()));
    }
    Ok(buf)
}

/// One-step temporal-difference errors, flattened time-major:
/// delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t),
/// with `bootstrap_value` standing in for V(s_{t+1}) at the buffer edge.
pub fn td_errors(buf: &RolloutBuffer, gamma: f64) -> Vec<f64> {
    let mut deltas = vec![0.0; buf.len()];
    for t in 0..buf.n_steps {
        for e in 0..buf.n_envs {
            let i = buf.flat_index(t, e);
            let next_value = if t + 1 < buf.n_steps {
                buf.values[buf.flat_index(t + 1, e)]
            } else {
                buf.bootstrap_value[e]
            };
            let mask = if buf.dones[i] { 0.0 } else { 1.0 };
            deltas[i] = buf.rewards[i] + gamma * next_value * mask - buf.values[i];
        }
    }
    deltas
}

/// Generalized advantage estimation by backward recursion:
/// A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1},
/// restarting the accumulator at episode boundaries. With lambda = 0 this
/// reduces exactly to the one-step TD errors.
pub fn gae(buf: &RolloutBuffer, gamma: f64, lambda: f64) -> AdvantageBatch {
    let deltas = td_errors(buf, gamma);
    let mut advantages = vec![0.0; buf.len()];
    for e in 0..buf.n_envs {
        let mut acc = 0.0;
        for t in (0..buf.n_steps).rev() {
            let i = buf.flat_index(t, e);
            let mask = if buf.dones[i] { 0.0 } else { 1.0 };
            acc = deltas[i] + gamma * lambda * mask * acc;
            advantages[i] = acc;
        }
    }
    AdvantageBatch {
        advantages,
        old_values: buf.values.clone(),
    }
}
