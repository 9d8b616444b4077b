//! Reference implementations the integration suites compare the library
//! against. Everything here is straight-line arithmetic over plain slices:
//! the advantage estimator is expanded as an explicit double sum instead of
//! a backward recursion, the controller and gate are transcribed step by
//! step, and the single-update PPO reference re-implements the forward pass,
//! backprop, gradient clip, and Adam as nested loops with no shared code.

#![allow(dead_code)]

use am_ppo::modulation::{ControllerState, ModulationConfig};
use am_ppo::rollout::RolloutBuffer;
use rand::Rng;

pub const LN_2PI: f64 = 1.8378770664093453;

/// Rollout buffer with random rewards, values, episode ends, and bootstrap
/// values; observations and actions are placeholders for estimator tests
/// that never touch them.
pub fn random_buffer(
    rng: &mut rand_chacha::ChaCha8Rng,
    max_steps: usize,
    max_envs: usize,
) -> RolloutBuffer {
    let n_steps = rng.gen_range(1..=max_steps);
    let n_envs = rng.gen_range(1..=max_envs);
    let len = n_steps * n_envs;
    RolloutBuffer {
        n_steps,
        n_envs,
        obs_dim: 1,
        act_dim: 1,
        observations: vec![0.0; len],
        actions: vec![0.0; len],
        logprobs: vec![0.0; len],
        rewards: (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        dones: (0..len).map(|_| rng.gen_bool(0.15)).collect(),
        values: (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        bootstrap_value: (0..n_envs).map(|_| rng.gen_range(-3.0..3.0)).collect(),
    }
}

// ---------------------------------------------------------------------------
// Advantage estimation oracles
// ---------------------------------------------------------------------------

/// O(T^2) advantage oracle. For each start step the geometric series is
/// expanded term by term, truncating at the first episode end, instead of
/// reusing a backward accumulator. Layout matches the rollout buffer:
/// entry (t, e) at t * n_envs + e.
pub fn gae_double_sum(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: &[f64],
    n_steps: usize,
    n_envs: usize,
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let idx = |t: usize, e: usize| t * n_envs + e;
    let mut adv = vec![0.0; n_steps * n_envs];
    for e in 0..n_envs {
        let mut delta = vec![0.0; n_steps];
        for t in 0..n_steps {
            let next = if t + 1 < n_steps {
                values[idx(t + 1, e)]
            } else {
                bootstrap[e]
            };
            let mask = if dones[idx(t, e)] { 0.0 } else { 1.0 };
            delta[t] = rewards[idx(t, e)] + gamma * next * mask - values[idx(t, e)];
        }
        for t in 0..n_steps {
            let mut acc = 0.0;
            let mut coef = 1.0;
            for l in t..n_steps {
                acc += coef * delta[l];
                if dones[idx(l, e)] {
                    break;
                }
                coef *= gamma * lambda;
            }
            adv[idx(t, e)] = acc;
        }
    }
    adv
}

/// Monte-Carlo oracle for lambda = 1: the advantage reduces to the discounted
/// return (bootstrapped only when the trajectory runs off the buffer end
/// without finishing) minus the value prediction.
pub fn monte_carlo_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: &[f64],
    n_steps: usize,
    n_envs: usize,
    gamma: f64,
) -> Vec<f64> {
    let idx = |t: usize, e: usize| t * n_envs + e;
    let mut adv = vec![0.0; n_steps * n_envs];
    for e in 0..n_envs {
        for t in 0..n_steps {
            let mut g = 0.0;
            let mut disc = 1.0;
            let mut finished = false;
            for l in t..n_steps {
                g += disc * rewards[idx(l, e)];
                if dones[idx(l, e)] {
                    finished = true;
                    break;
                }
                disc *= gamma;
            }
            if !finished {
                // disc is already gamma^(steps consumed), so the bootstrap
                // value of the state after the last step needs no extra
                // discount factor.
                g += disc * bootstrap[e];
            }
            adv[idx(t, e)] = g - values[idx(t, e)];
        }
    }
    adv
}

// ---------------------------------------------------------------------------
// Controller and gate oracles
// ---------------------------------------------------------------------------

pub struct ControllerRef {
    pub alpha_hat: f64,
    pub sat_current: f64,
    pub skipped: bool,
}

/// Step-by-step transcription of the once-per-iteration feedback update:
/// measure the batch norm and Bessel spread, form the target gain against the
/// previous smoothed saturation, blend and clamp the gain EMA, re-measure the
/// strict saturation fraction with the new gain, blend the saturation EMA,
/// and freeze the gain for the minibatches. A batch whose norm is below the
/// degeneracy guard leaves the state untouched.
pub fn controller_reference(
    state: &mut ControllerState,
    batch: &[f64],
    cfg: &ModulationConfig,
) -> ControllerRef {
    let mut sq = 0.0;
    for &a in batch {
        sq += a * a;
    }
    let n_a = sq.sqrt();
    if n_a < cfg.eps_a {
        return ControllerRef {
            alpha_hat: state.alpha_ema,
            sat_current: 0.0,
            skipped: true,
        };
    }
    let n = batch.len();
    let sigma = if n < 2 {
        cfg.eps_a
    } else {
        let mut mean = 0.0;
        for &a in batch {
            mean += a;
        }
        mean /= n as f64;
        let mut ss = 0.0;
        for &a in batch {
            ss += (a - mean) * (a - mean);
        }
        (ss / (n as f64 - 1.0)).sqrt() + cfg.eps_a
    };
    let feedback = (cfg.p_star / (state.sat_ema + cfg.eps_a)).powf(cfg.eta);
    let alpha_hat = cfg.kappa_shared * ((n_a + cfg.eps_a) / sigma) * feedback;
    let mut alpha = (1.0 - cfg.rho_alpha) * state.alpha_ema + cfg.rho_alpha * alpha_hat;
    if alpha < cfg.alpha_min {
        alpha = cfg.alpha_min;
    }
    if alpha > cfg.alpha_max {
        alpha = cfg.alpha_max;
    }
    state.alpha_ema = alpha;
    let mut above = 0usize;
    for &a in batch {
        let z = alpha * a / (n_a + cfg.eps_a);
        if z.abs() > cfg.tau {
            above += 1;
        }
    }
    let sat_current = above as f64 / n as f64;
    state.sat_ema = (1.0 - cfg.rho_sat) * state.sat_ema + cfg.rho_sat * sat_current;
    state.frozen_alpha = alpha;
    ControllerRef {
        alpha_hat,
        sat_current,
        skipped: false,
    }
}

/// Transcription of the saturating gate: each advantage keeps its magnitude
/// as the carrier and takes its scale and sign from tanh of the gain times
/// its share of the batch norm.
pub fn modulate_reference(batch: &[f64], alpha: f64, cfg: &ModulationConfig) -> Vec<f64> {
    let mut sq = 0.0;
    for &a in batch {
        sq += a * a;
    }
    let n_a = sq.sqrt();
    if n_a < cfg.eps_a {
        return batch.to_vec();
    }
    batch
        .iter()
        .map(|&a| {
            let z = alpha * a / (n_a + cfg.eps_a);
            a.abs() * cfg.kappa_shared * z.tanh()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Loss and density oracles
// ---------------------------------------------------------------------------

pub fn log_prob_reference(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    let mut lp = 0.0;
    for d in 0..mean.len() {
        let sigma = log_std[d].exp();
        let u = (action[d] - mean[d]) / sigma;
        lp += -0.5 * u * u - log_std[d] - 0.5 * LN_2PI;
    }
    lp
}

pub fn entropy_reference(log_std: &[f64]) -> f64 {
    let mut h = 0.0;
    for &s in log_std {
        h += 0.5 * (1.0 + LN_2PI) + s;
    }
    h
}

/// Scalar clipped-surrogate loss: negated mean over the minibatch of
/// min(ratio * adv, clamp(ratio) * adv), plus the fraction of ratios strictly
/// outside the clip band.
pub fn policy_loss_reference(
    logp_new: &[f64],
    logp_old: &[f64],
    adv: &[f64],
    clip_eps: f64,
) -> (f64, f64) {
    let m = logp_new.len();
    let mut total = 0.0;
    let mut clipped = 0usize;
    for j in 0..m {
        let ratio = (logp_new[j] - logp_old[j]).exp();
        let unclipped = ratio * adv[j];
        let mut r_c = ratio;
        if r_c < 1.0 - clip_eps {
            r_c = 1.0 - clip_eps;
        }
        if r_c > 1.0 + clip_eps {
            r_c = 1.0 + clip_eps;
        }
        let clipped_term = r_c * adv[j];
        total += if unclipped <= clipped_term {
            unclipped
        } else {
            clipped_term
        };
        if (ratio - 1.0).abs() > clip_eps {
            clipped += 1;
        }
    }
    (-(total / m as f64), clipped as f64 / m as f64)
}

/// Scalar value loss: half the mean of max(unclipped, clipped) squared
/// errors, where the clipped prediction may move at most clip_eps from its
/// rollout-time value.
pub fn value_loss_reference(
    v_new: &[f64],
    v_old: &[f64],
    targets: &[f64],
    clip_eps: f64,
    clip_vloss: bool,
) -> f64 {
    let m = v_new.len();
    let mut total = 0.0;
    for j in 0..m {
        let e1 = v_new[j] - targets[j];
        if clip_vloss {
            let mut dv = v_new[j] - v_old[j];
            if dv < -clip_eps {
                dv = -clip_eps;
            }
            if dv > clip_eps {
                dv = clip_eps;
            }
            let e2 = v_old[j] + dv - targets[j];
            total += if e1 * e1 >= e2 * e2 { e1 * e1 } else { e2 * e2 };
        } else {
            total += e1 * e1;
        }
    }
    0.5 * total / m as f64
}

pub fn normalize_reference(a: &[f64]) -> Vec<f64> {
    let m = a.len();
    if m < 2 {
        return a.to_vec();
    }
    let mut mean = 0.0;
    for &x in a {
        mean += x;
    }
    mean /= m as f64;
    let mut ss = 0.0;
    for &x in a {
        ss += (x - mean) * (x - mean);
    }
    let std = (ss / (m as f64 - 1.0)).sqrt();
    a.iter().map(|&x| (x - mean) / (std + 1e-8)).collect()
}

// ---------------------------------------------------------------------------
// Environment oracle
// ---------------------------------------------------------------------------

/// Independent double-integrator step: clamp the force to the unit box, move
/// the position under the pre-step velocity, integrate the force into the
/// velocity, and charge the quadratic state-plus-effort cost of the post-step
/// state. Returns the reward.
pub fn env_reference_step(pos: &mut [f64], vel: &mut [f64], action: &[f64]) -> f64 {
    let dt = 0.05;
    let clamped: Vec<f64> = action
        .iter()
        .map(|&a| {
            if a < -1.0 {
                -1.0
            } else if a > 1.0 {
                1.0
            } else {
                a
            }
        })
        .collect();
    for d in 0..pos.len() {
        pos[d] += vel[d] * dt;
        vel[d] += clamped[d] * dt;
    }
    let mut cost = 0.0;
    for d in 0..pos.len() {
        cost += pos[d] * pos[d] + 0.1 * vel[d] * vel[d] + 0.001 * clamped[d] * clamped[d];
    }
    -cost
}

// ---------------------------------------------------------------------------
// Straight-line single-update PPO reference
// ---------------------------------------------------------------------------

pub struct RefTensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub grad: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// Mirror of the combined actor-critic parameter list: six policy tensors
/// (weight/bias for each of three layers), the log-std vector, six value
/// tensors. Adam state is carried per entry like the real optimizer.
pub struct RefNet {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden: usize,
    pub tensors: Vec<RefTensor>,
    pub adam_t: u64,
}

pub const REF_POLICY_BASE: usize = 0;
pub const REF_LOG_STD: usize = 6;
pub const REF_VALUE_BASE: usize = 7;

impl RefNet {
    /// Build the tensor list from a flat parameter vector in tensor order,
    /// with zeroed gradients and moments.
    pub fn from_flat(obs_dim: usize, act_dim: usize, hidden: usize, flat: &[f64]) -> RefNet {
        let shapes = [
            (hidden, obs_dim),
            (hidden, 1),
            (hidden, hidden),
            (hidden, 1),
            (act_dim, hidden),
            (act_dim, 1),
            (act_dim, 1), // log-std
            (hidden, obs_dim),
            (hidden, 1),
            (hidden, hidden),
            (hidden, 1),
            (1, hidden),
            (1, 1),
        ];
        let mut tensors = Vec::new();
        let mut k = 0;
        for &(rows, cols) in &shapes {
            let n = rows * cols;
            tensors.push(RefTensor {
                rows,
                cols,
                data: flat[k..k + n].to_vec(),
                grad: vec![0.0; n],
                m: vec![0.0; n],
                v: vec![0.0; n],
            });
            k += n;
        }
        assert_eq!(k, flat.len(), "flat parameter count mismatch");
        RefNet {
            obs_dim,
            act_dim,
            hidden,
            tensors,
            adam_t: 0,
        }
    }

    pub fn flat_data(&self) -> Vec<f64> {
        self.tensors
            .iter()
            .flat_map(|t| t.data.iter().copied())
            .collect()
    }

    pub fn zero_grads(&mut self) {
        for t in &mut self.tensors {
            for g in &mut t.grad {
                *g = 0.0;
            }
        }
    }
}

/// Forward through one three-layer head (tanh, tanh, linear), returning the
/// output and the activations feeding each layer.
pub fn ref_forward(net: &RefNet, base: usize, input: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut acts: Vec<Vec<f64>> = vec![input.to_vec()];
    for l in 0..3 {
        let w = &net.tensors[base + 2 * l];
        let b = &net.tensors[base + 2 * l + 1];
        let x = acts[l].clone();
        let mut z = vec![0.0; w.rows];
        for j in 0..w.rows {
            let mut acc = b.data[j];
            for i in 0..w.cols {
                acc += w.data[j * w.cols + i] * x[i];
            }
            z[j] = acc;
        }
        if l < 2 {
            for v in z.iter_mut() {
                *v = v.tanh();
            }
            acts.push(z);
        } else {
            return (z, acts);
        }
    }
    unreachable!("three-layer head always returns from the last layer");
}

/// Accumulate one sample's gradients through a three-layer head.
pub fn ref_backward(net: &mut RefNet, base: usize, acts: &[Vec<f64>], d_out: &[f64]) {
    let mut delta = d_out.to_vec();
    for l in (0..3).rev() {
        let x = acts[l].clone();
        let rows = net.tensors[base + 2 * l].rows;
        let cols = net.tensors[base + 2 * l].cols;
        for j in 0..rows {
            for i in 0..cols {
                net.tensors[base + 2 * l].grad[j * cols + i] += delta[j] * x[i];
            }
        }
        for j in 0..rows {
            net.tensors[base + 2 * l + 1].grad[j] += delta[j];
        }
        if l > 0 {
            let mut prev = vec![0.0; cols];
            for j in 0..rows {
                for i in 0..cols {
                    prev[i] += net.tensors[base + 2 * l].data[j * cols + i] * delta[j];
                }
            }
            for i in 0..cols {
                prev[i] *= 1.0 - x[i] * x[i];
            }
            delta = prev;
        }
    }
}

pub struct RefUpdateCfg {
    pub clip_eps: f64,
    pub vf_coef: f64,
    pub ent_coef: f64,
    pub norm_adv: bool,
    pub clip_vloss: bool,
    pub max_grad_norm: f64,
    pub lr: f64,
}

/// One epoch, one minibatch of plain clipped-surrogate PPO over the whole
/// batch, visiting samples in `order`: gather, build targets from the raw
/// advantages, optionally normalize, forward, form the per-sample loss
/// derivatives, backpropagate, clip the global gradient norm, and take one
/// Adam step. Mutates the reference net in place.
pub fn reference_ppo_single_update(
    net: &mut RefNet,
    obs: &[Vec<f64>],
    actions: &[Vec<f64>],
    logp_old_all: &[f64],
    adv_raw_all: &[f64],
    v_old_all: &[f64],
    order: &[usize],
    cfg: &RefUpdateCfg,
) {
    let m = order.len();
    let a_raw: Vec<f64> = order.iter().map(|&i| adv_raw_all[i]).collect();
    let v_old: Vec<f64> = order.iter().map(|&i| v_old_all[i]).collect();
    let logp_old: Vec<f64> = order.iter().map(|&i| logp_old_all[i]).collect();
    let targets: Vec<f64> = a_raw.iter().zip(v_old.iter()).map(|(a, v)| a + v).collect();
    let a_used = if cfg.norm_adv {
        normalize_reference(&a_raw)
    } else {
        a_raw
    };

    let log_std = net.tensors[REF_LOG_STD].data.clone();

    // Forward passes.
    let mut logp_new = vec![0.0; m];
    let mut v_new = vec![0.0; m];
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut policy_acts: Vec<Vec<Vec<f64>>> = Vec::with_capacity(m);
    let mut value_acts: Vec<Vec<Vec<f64>>> = Vec::with_capacity(m);
    for (j, &i) in order.iter().enumerate() {
        let (mean, pacts) = ref_forward(net, REF_POLICY_BASE, &obs[i]);
        let (v, vacts) = ref_forward(net, REF_VALUE_BASE, &obs[i]);
        logp_new[j] = log_prob_reference(&mean, &log_std, &actions[i]);
        v_new[j] = v[0];
        means.push(mean);
        policy_acts.push(pacts);
        value_acts.push(vacts);
    }

    // Per-sample loss derivatives.
    let inv_m = 1.0 / m as f64;
    let mut d_logp = vec![0.0; m];
    let mut d_value = vec![0.0; m];
    for j in 0..m {
        let ratio = (logp_new[j] - logp_old[j]).exp();
        let mut r_c = ratio;
        if r_c < 1.0 - cfg.clip_eps {
            r_c = 1.0 - cfg.clip_eps;
        }
        if r_c > 1.0 + cfg.clip_eps {
            r_c = 1.0 + cfg.clip_eps;
        }
        if ratio * a_used[j] <= r_c * a_used[j] {
            d_logp[j] = -inv_m * ratio * a_used[j];
        }
        let e1 = v_new[j] - targets[j];
        if cfg.clip_vloss {
            let mut dv = v_new[j] - v_old[j];
            if dv < -cfg.clip_eps {
                dv = -cfg.clip_eps;
            }
            if dv > cfg.clip_eps {
                dv = cfg.clip_eps;
            }
            let e2 = v_old[j] + dv - targets[j];
            if e1 * e1 >= e2 * e2 {
                d_value[j] = inv_m * e1;
            }
        } else {
            d_value[j] = inv_m * e1;
        }
    }

    // Backward.
    net.zero_grads();
    let mut d_log_std = vec![-cfg.ent_coef; net.act_dim];
    for (j, &i) in order.iter().enumerate() {
        if d_logp[j] != 0.0 {
            let mut d_mean = vec![0.0; net.act_dim];
            for d in 0..net.act_dim {
                let sigma = log_std[d].exp();
                let u = (actions[i][d] - means[j][d]) / sigma;
                d_mean[d] = u / sigma * d_logp[j];
                d_log_std[d] += (u * u - 1.0) * d_logp[j];
            }
            let pacts = policy_acts[j].clone();
            ref_backward(net, REF_POLICY_BASE, &pacts, &d_mean);
        }
        let dv = cfg.vf_coef * d_value[j];
        if dv != 0.0 {
            let vacts = value_acts[j].clone();
            ref_backward(net, REF_VALUE_BASE, &vacts, &[dv]);
        }
    }
    for d in 0..net.act_dim {
        net.tensors[REF_LOG_STD].grad[d] += d_log_std[d];
    }

    // Global gradient-norm clip.
    let mut sq = 0.0;
    for t in &net.tensors {
        for g in &t.grad {
            sq += g * g;
        }
    }
    let norm = sq.sqrt();
    if norm > cfg.max_grad_norm {
        let scale = cfg.max_grad_norm / norm;
        for t in &mut net.tensors {
            for g in &mut t.grad {
                *g *= scale;
            }
        }
    }

    // One Adam step with bias correction.
    let beta1: f64 = 0.9;
    let beta2: f64 = 0.999;
    let eps = 1e-8;
    net.adam_t += 1;
    let t_step = net.adam_t as i32;
    let bc1 = 1.0 - beta1.powi(t_step);
    let bc2 = 1.0 - beta2.powi(t_step);
    for t in &mut net.tensors {
        for k in 0..t.data.len() {
            let g = t.grad[k];
            t.m[k] = beta1 * t.m[k] + (1.0 - beta1) * g;
            t.v[k] = beta2 * t.v[k] + (1.0 - beta2) * g * g;
            let m_hat = t.m[k] / bc1;
            let v_hat = t.v[k] / bc2;
            t.data[k] -= cfg.lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Numeric helpers
// ---------------------------------------------------------------------------

/// Central finite differences of a scalar function over every coordinate.
pub fn central_differences<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        let orig = probe[k];
        probe[k] = orig + h;
        let fp = f(&probe);
        probe[k] = orig - h;
        let fm = f(&probe);
        probe[k] = orig;
        g[k] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Relative gap with an absolute floor: zero against zero is zero, otherwise
/// |a - b| / max(|b|, floor).
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / b.abs().max(floor)
}
