//! Clipped-surrogate policy and value updates.
//!
//! `run_update` consumes one iteration's rollout: for each epoch it shuffles
//! the flat sample indices, walks contiguous minibatches, gates the raw
//! advantages (identity for plain PPO), builds value targets from the gated
//! advantages plus the old value predictions, optionally normalizes the
//! policy advantages, and takes one clipped Adam step per minibatch.
//!
//! Gradients are assembled analytically: the loss derivative with respect to
//! each sample's new log-probability and value prediction is computed in
//! closed form, then pushed through the networks' reverse passes. Branch
//! choices (surrogate min, value-clip max) mirror the loss exactly so the
//! logged loss is the one being descended.

use crate::error::{Error, Result};
use crate::gaussian;
use crate::modulation::{modulate_minibatch, value_targets, ControllerState, ModulationConfig};
use crate::nn::ActorCritic;
use crate::optim::{adam_step, clip_global_grad_norm};
use crate::rollout::{AdvantageBatch, RolloutBuffer};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Ppo,
    AmPpo,
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppo" => Ok(Algo::Ppo),
            "am_ppo" | "am-ppo" => Ok(Algo::AmPpo),
            other => Err(Error::config(
                "algo",
                format!("unknown algorithm '{other}' (expected ppo or am-ppo)"),
            )),
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algo::Ppo => write!(f, "ppo"),
            Algo::AmPpo => write!(f, "am_ppo"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateConfig {
    pub algo: Algo,
    pub clip_eps: f64,
    pub vf_coef: f64,
    pub ent_coef: f64,
    pub n_epochs: usize,
    pub n_minibatches: usize,
    pub norm_adv: bool,
    pub clip_vloss: bool,
    pub max_grad_norm: f64,
}

/// One line of metrics.jsonl. Field order is the file's column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iteration: u64,
    pub global_step: u64,
    pub mean_episodic_return: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub alpha_ema: f64,
    pub sat_ema: f64,
    pub sat_current: f64,
    pub ratio_clip_fraction: f64,
    pub grad_norm_preclip: f64,
    pub lr_current: f64,
}

/// What one `run_update` call reports upward.
/// Losses, entropy, and the pre-clip gradient norm come from the final
/// minibatch of the final epoch; the clip fraction is averaged over every
/// minibatch of the update.
#[derive(Debug, Clone, Copy)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub ratio_clip_fraction: f64,
    pub grad_norm_preclip: f64,
}

/// Center and scale to unit spread: (a - mean) / (sample std + 1e-8).
/// Fewer than two elements pass through unchanged; a constant batch maps to
/// all zeros because only the guard remains in the denominator.
pub fn normalize_advantages(a: &[f64]) -> Vec<f64> {
    let m = a.len();
    if m < 2 {
        return a.to_vec();
    }
    let mean = a.iter().sum::<f64>() / m as f64;
    let ss: f64 = a.iter().map(|x| (x - mean) * (x - mean)).sum();
    let std = (ss / (m - 1) as f64).sqrt();
    a.iter().map(|x| (x - mean) / (std + 1e-8)).collect()
}

pub struct PolicyLossTerms {
    pub loss: f64,
    pub clip_fraction: f64,
    /// dLoss/d(logp_new) per sample, including the -1/m of the negated mean.
    pub d_logp: Vec<f64>,
}

/// Clipped surrogate: loss = -mean_j min(r_j * a_j, clip(r_j) * a_j) with
/// r_j = exp(logp_new_j - logp_old_j). Also reports the fraction of ratios
/// strictly outside the clip band.
///
/// Gradient note: when the clipped term is strictly smaller the clip is
/// active and the derivative vanishes; ties take the unclipped branch (the
/// two terms are locally identical there anyway).
pub fn policy_loss_terms(
    logp_new: &[f64],
    logp_old: &[f64],
    adv: &[f64],
    clip_eps: f64,
) -> Result<PolicyLossTerms> {
    assert_eq!(logp_new.len(), logp_old.len(), "logp length mismatch");
    assert_eq!(logp_new.len(), adv.len(), "advantage length mismatch");
    let m = logp_new.len();
    assert!(m > 0, "empty minibatch");
    let inv_m = 1.0 / m as f64;
    let mut loss = 0.0;
    let mut clipped = 0usize;
    let mut d_logp = vec![0.0; m];
    for j in 0..m {
        let ratio = (logp_new[j] - logp_old[j]).exp();
        if !ratio.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite probability ratio at minibatch sample {j}"
            )));
        }
        let unclipped = ratio * adv[j];
        let clipped_term = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * adv[j];
        if (ratio - 1.0).abs() > clip_eps {
            clipped += 1;
        }
        if unclipped <= clipped_term {
            loss -= inv_m * unclipped;
            d_logp[j] = -inv_m * ratio * adv[j];
        } else {
            loss -= inv_m * clipped_term;
            d_logp[j] = 0.0;
        }
    }
    Ok(PolicyLossTerms {
        loss,
        clip_fraction: clipped as f64 * inv_m,
        d_logp,
    })
}

pub fn policy_loss(
    logp_new: &[f64],
    logp_old: &[f64],
    adv: &[f64],
    clip_eps: f64,
) -> Result<(f64, f64)> {
    let t = policy_loss_terms(logp_new, logp_old, adv, clip_eps)?;
    Ok((t.loss, t.clip_fraction))
}

pub struct ValueLossTerms {
    pub loss: f64,
    /// dLoss/d(v_new) per sample, including the 1/m of the mean.
    pub d_value: Vec<f64>,
}

/// Half mean squared error against the targets, optionally with the move
/// of the prediction away from its rollout-time value clipped: the per
/// sample term is max((v - t)^2, (v_old + clip(v - v_old) - t)^2), so a
/// prediction that ran too far from v_old cannot reduce its error below the
/// clipped one.
pub fn value_loss_terms(
    v_new: &[f64],
    v_old: &[f64],
    targets: &[f64],
    clip_eps: f64,
    clip_vloss: bool,
) -> ValueLossTerms {
    assert_eq!(v_new.len(), v_old.len(), "value length mismatch");
    assert_eq!(v_new.len(), targets.len(), "target length mismatch");
    let m = v_new.len();
    assert!(m > 0, "empty minibatch");
    let inv_m = 1.0 / m as f64;
    let mut loss = 0.0;
    let mut d_value = vec![0.0; m];
    for j in 0..m {
        let e1 = v_new[j] - targets[j];
        if clip_vloss {
            let delta = (v_new[j] - v_old[j]).clamp(-clip_eps, clip_eps);
            let e2 = v_old[j] + delta - targets[j];
            if e1 * e1 >= e2 * e2 {
                loss += 0.5 * inv_m * e1 * e1;
                d_value[j] = inv_m * e1;
            } else {
                // Strictly larger clipped error implies the clip is active,
                // so e2 does not depend on v_new.
                loss += 0.5 * inv_m * e2 * e2;
                d_value[j] = 0.0;
            }
        } else {
            loss += 0.5 * inv_m * e1 * e1;
            d_value[j] = inv_m * e1;
        }
    }
    ValueLossTerms { loss, d_value }
}

pub fn value_loss(
    v_new: &[f64],
    v_old: &[f64],
    targets: &[f64],
    clip_eps: f64,
    clip_vloss: bool,
) -> f64 {
    value_loss_terms(v_new, v_old, targets, clip_eps, clip_vloss).loss
}

/// Run every epoch and minibatch of one policy-improvement phase, stepping
/// the model in place.
///
/// For `Algo::AmPpo` the caller must already have run the controller update
/// for this iteration; minibatches gate their advantages with
/// `ctrl.frozen_alpha`. For `Algo::Ppo` advantages pass through untouched.
/// Value targets are always built from the gated advantages *before* any
/// normalization.
#[allow(clippy::too_many_arguments)]
pub fn run_update(
    model: &mut ActorCritic,
    buf: &RolloutBuffer,
    adv: &AdvantageBatch,
    ctrl: &ControllerState,
    cfg: &UpdateConfig,
    mod_cfg: &ModulationConfig,
    lr: f64,
    shuffle_rng: &mut ChaCha8Rng,
) -> Result<UpdateStats> {
    let n = buf.len();
    if n == 0 {
        return Err(Error::config("n_steps", "empty rollout batch"));
    }
    if cfg.n_minibatches == 0 || n % cfg.n_minibatches != 0 {
        return Err(Error::config(
            "n_minibatches",
            format!("{} does not divide the batch size {}", cfg.n_minibatches, n),
        ));
    }
    let mb_size = n / cfg.n_minibatches;
    let mut indices: Vec<usize> = (0..n).collect();
    let mut clip_frac_sum = 0.0;
    let mut last_policy_loss = 0.0;
    let mut last_value_loss = 0.0;
    let mut last_entropy = 0.0;
    let mut last_grad_norm = 0.0;

    for _epoch in 0..cfg.n_epochs {
        indices.shuffle(shuffle_rng);
        for mb in 0..cfg.n_minibatches {
            let mb_idx = &indices[mb * mb_size..(mb + 1) * mb_size];

            let a_raw: Vec<f64> = mb_idx.iter().map(|&i| adv.advantages[i]).collect();
            let v_old: Vec<f64> = mb_idx.iter().map(|&i| adv.old_values[i]).collect();
            let logp_old: Vec<f64> = mb_idx.iter().map(|&i| buf.logprobs[i]).collect();

            let a_gated = match cfg.algo {
                Algo::Ppo => a_raw,
                Algo::AmPpo => modulate_minibatch(&a_raw, ctrl.frozen_alpha, mod_cfg),
            };
            let targets = value_targets(&a_gated, &v_old);
            let a_used = if cfg.norm_adv {
                normalize_advantages(&a_gated)
            } else {
                a_gated
            };

            // Forward passes under the current parameters.
            let log_std = model.log_std().to_vec();
            let mut logp_new = Vec::with_capacity(mb_size);
            let mut v_new = Vec::with_capacity(mb_size);
            let mut means = Vec::with_capacity(mb_size);
            let mut policy_caches = Vec::with_capacity(mb_size);
            let mut value_caches = Vec::with_capacity(mb_size);
            for &i in mb_idx {
                let obs = buf.obs_flat(i);
                let (mean, pcache) = model.policy.forward(&model.params, obs);
                let (v, vcache) = model.value.forward(&model.params, obs);
                logp_new.push(gaussian::log_prob(&mean, &log_std, buf.action_flat(i)));
                v_new.push(v[0]);
                means.push(mean);
                policy_caches.push(pcache);
                value_caches.push(vcache);
            }

            let pol = policy_loss_terms(&logp_new, &logp_old, &a_used, cfg.clip_eps)?;
            let val = value_loss_terms(&v_new, &v_old, &targets, cfg.clip_eps, cfg.clip_vloss);
            let entropy = gaussian::entropy(&log_std);
            if !pol.loss.is_finite() || !val.loss.is_finite() {
                return Err(Error::Numeric("non-finite loss in update".into()));
            }

            // Backward: d(total)/d(mean), d(total)/d(v), d(total)/d(log_std).
            model.params.zero_grads();
            let mut d_log_std = vec![-cfg.ent_coef; model.act_dim];
            for (j, &i) in mb_idx.iter().enumerate() {
                let (d_mean_unit, d_ls_unit) =
                    gaussian::log_prob_grad(&means[j], &log_std, buf.action_flat(i));
                if pol.d_logp[j] != 0.0 {
                    let d_mean: Vec<f64> =
                        d_mean_unit.iter().map(|g| g * pol.d_logp[j]).collect();
                    model
                        .policy
                        .backward(&mut model.params, &policy_caches[j], &d_mean);
                    for (acc, g) in d_log_std.iter_mut().zip(d_ls_unit.iter()) {
                        *acc += g * pol.d_logp[j];
                    }
                }
                let dv = cfg.vf_coef * val.d_value[j];
                if dv != 0.0 {
                    model
                        .value
                        .backward(&mut model.params, &value_caches[j], &[dv]);
                }
            }
            model.accumulate_log_std_grad(&d_log_std);

            let grad_norm = clip_global_grad_norm(&mut model.params, cfg.max_grad_norm);
            adam_step(&mut model.params, lr)?;

            clip_frac_sum += pol.clip_fraction;
            last_policy_loss = pol.loss;
            last_value_loss = val.loss;
            last_entropy = entropy;
            last_grad_norm = grad_norm;
        }
    }

    let total_minibatches = (cfg.n_epochs * cfg.n_minibatches) as f64;
    Ok(UpdateStats {
        policy_loss: last_policy_loss,
        value_loss: last_value_loss,
        entropy: last_entropy,
        ratio_clip_fraction: clip_frac_sum / total_minibatches,
        grad_norm_preclip: last_grad_norm,
    })
}
