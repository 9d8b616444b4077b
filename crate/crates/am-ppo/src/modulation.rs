//! Adaptive advantage modulation.
//!
//! Raw GAE advantages are rescaled through a saturating gate before they
//! reach the surrogate loss: each advantage keeps its magnitude as a carrier
//! and is re-signed and re-scaled by `kappa_shared * tanh(alpha * a / |a|_2)`.
//! The gain `alpha` is not a constant. Once per iteration a feedback
//! controller compares how much of the batch saturates the gate against a
//! target fraction `p_star` and nudges an exponential moving average of
//! alpha up (too little saturation) or down (too much). Minibatches inside
//! the iteration all use the alpha frozen at controller-update time, so an
//! epoch sees one consistent gate.
//!
//! The controller state is three numbers and its update is pure arithmetic,
//! which keeps runs reproducible and lets a recorded advantage trace be
//! replayed offline.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Gate and feedback constants. Defaults are the standard AM-PPO settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationConfig {
    /// Gate gain: modulated advantages live in (-kappa*|a|, kappa*|a|).
    pub kappa_shared: f64,
    /// Saturation threshold on |Z|.
    pub tau: f64,
    /// Target fraction of the batch with |Z| above tau.
    pub p_star: f64,
    /// Exponent shaping how hard the saturation error pushes back on alpha.
    pub eta: f64,
    /// EMA rate for alpha: new alpha counts rho_alpha.
    pub rho_alpha: f64,
    /// EMA rate for the saturation estimate: the fresh measurement counts
    /// rho_sat.
    pub rho_sat: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Degeneracy guard added to norms and denominators.
    pub eps_a: f64,
    pub alpha_init: f64,
    pub sat_init: f64,
}

impl Default for ModulationConfig {
    fn default() -> Self {
        ModulationConfig {
            kappa_shared: 2.0,
            tau: 1.25,
            p_star: 0.10,
            eta: 0.3,
            rho_alpha: 0.1,
            rho_sat: 0.98,
            alpha_min: 1e-12,
            alpha_max: 1e12,
            eps_a: 1e-5,
            alpha_init: 1.0,
            sat_init: 0.10,
        }
    }
}

impl ModulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_shared > 0.0) {
            return Err(Error::config("kappa_shared", "must be > 0"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::config("tau", "must be > 0"));
        }
        if !(self.p_star > 0.0 && self.p_star < 1.0) {
            return Err(Error::config("p_star", "must be in (0, 1)"));
        }
        if !(self.eta >= 0.0) {
            return Err(Error::config("eta", "must be >= 0"));
        }
        if !(self.rho_alpha > 0.0 && self.rho_alpha <= 1.0) {
            return Err(Error::config("rho_alpha", "must be in (0, 1]"));
        }
        if !(self.rho_sat > 0.0 && self.rho_sat <= 1.0) {
            return Err(Error::config("rho_sat", "must be in (0, 1]"));
        }
        if !(self.alpha_min > 0.0) {
            return Err(Error::config("alpha_min", "must be > 0"));
        }
        if !(self.alpha_max >= self.alpha_min) {
            return Err(Error::config("alpha_max", "must be >= alpha_min"));
        }
        if !(self.eps_a > 0.0) {
            return Err(Error::config("eps_a", "must be > 0"));
        }
        if !(self.alpha_init >= self.alpha_min && self.alpha_init <= self.alpha_max) {
            return Err(Error::config("alpha_init", "must lie in [alpha_min, alpha_max]"));
        }
        if !(self.sat_init >= 0.0 && self.sat_init <= 1.0) {
            return Err(Error::config("sat_init", "must be in [0, 1]"));
        }
        Ok(())
    }
}

/// The controller's full state between iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    /// Smoothed gate gain.
    pub alpha_ema: f64,
    /// Smoothed saturation fraction driving the feedback term.
    pub sat_ema: f64,
    /// Alpha snapshot used by every minibatch until the next controller
    /// update.
    pub frozen_alpha: f64,
}

impl ControllerState {
    pub fn new(cfg: &ModulationConfig) -> Self {
        ControllerState {
            alpha_ema: cfg.alpha_init,
            sat_ema: cfg.sat_init,
            frozen_alpha: cfg.alpha_init,
        }
    }
}

/// Per-update diagnostics from `update_controller`.
#[derive(Debug, Clone, Copy)]
pub struct ControllerUpdate {
    /// Raw (pre-EMA, pre-clamp) target gain.
    pub alpha_hat: f64,
    /// Fresh saturation fraction measured with the new alpha.
    pub sat_current: f64,
    /// True when the batch was degenerate and the state was left untouched.
    pub skipped: bool,
}

/// Fraction of entries with |z| strictly above `tau`.
pub fn saturation(z: &[f64], tau: f64) -> f64 {
    if z.is_empty() {
        return 0.0;
    }
    let count = z.iter().filter(|&&x| x.abs() > tau).count();
    count as f64 / z.len() as f64
}

/// Bessel-corrected standard deviation. Defined as 0 for fewer than two
/// samples; callers add their own degeneracy guard.
fn sample_std(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// One feedback update on the full iteration batch of raw advantages.
///
/// Order matters and is fixed:
/// 1. batch norm N and guarded spread sigma = std + eps_a (sigma = eps_a
///    when the batch has a single element),
/// 2. target gain alpha_hat = kappa * (N + eps_a)/sigma *
///    (p_star / (sat_ema + eps_a))^eta, using the *previous* sat_ema,
/// 3. alpha_ema blends toward alpha_hat and is clamped to
///    [alpha_min, alpha_max],
/// 4. Z is re-measured with the new alpha_ema,
/// 5. the strict-threshold saturation of Z becomes the fresh measurement,
/// 6. sat_ema blends toward it with weight rho_sat,
/// 7. the new alpha_ema is frozen for the epoch's minibatches.
///
/// A batch with norm below eps_a carries no usable signal; the state is
/// returned unchanged.
pub fn update_controller(
    state: &mut ControllerState,
    advantages: &[f64],
    cfg: &ModulationConfig,
) -> Result<ControllerUpdate> {
    if advantages.is_empty() {
        return Err(Error::config("n_steps", "controller update on an empty batch"));
    }
    if advantages.iter().any(|a| !a.is_finite()) {
        return Err(Error::Numeric("non-finite advantage in controller update".into()));
    }
    let norm: f64 = advantages.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm < cfg.eps_a {
        return Ok(ControllerUpdate {
            alpha_hat: state.alpha_ema,
            sat_current: 0.0,
            skipped: true,
        });
    }
    let sigma = if advantages.len() < 2 {
        cfg.eps_a
    } else {
        sample_std(advantages) + cfg.eps_a
    };
    let feedback = (cfg.p_star / (state.sat_ema + cfg.eps_a)).powf(cfg.eta);
    let alpha_hat = cfg.kappa_shared * ((norm + cfg.eps_a) / sigma) * feedback;
    let blended = (1.0 - cfg.rho_alpha) * state.alpha_ema + cfg.rho_alpha * alpha_hat;
    state.alpha_ema = blended.clamp(cfg.alpha_min, cfg.alpha_max);
    let z: Vec<f64> = advantages
        .iter()
        .map(|a| state.alpha_ema * a / (norm + cfg.eps_a))
        .collect();
    let sat_current = saturation(&z, cfg.tau);
    state.sat_ema = (1.0 - cfg.rho_sat) * state.sat_ema + cfg.rho_sat * sat_current;
    state.frozen_alpha = state.alpha_ema;
    Ok(ControllerUpdate {
        alpha_hat,
        sat_current,
        skipped: false,
    })
}

/// Gate one minibatch of raw advantages with a frozen gain.
///
/// a_mod_i = |a_i| * kappa * tanh(frozen_alpha * a_i / (|a|_2 + eps_a)),
/// normalized by this minibatch's own L2 norm. A minibatch with norm below
/// eps_a passes through unchanged.
pub fn modulate_minibatch(
    advantages: &[f64],
    frozen_alpha: f64,
    cfg: &ModulationConfig,
) -> Vec<f64> {
    let norm: f64 = advantages.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm < cfg.eps_a {
        return advantages.to_vec();
    }
    advantages
        .iter()
        .map(|&a| {
            let z = frozen_alpha * a / (norm + cfg.eps_a);
            a.abs() * cfg.kappa_shared * z.tanh()
        })
        .collect()
}

/// Regression targets for the value head: modulated advantage plus the old
/// value prediction, element by element.
pub fn value_targets(a_mod: &[f64], old_values: &[f64]) -> Vec<f64> {
    assert_eq!(a_mod.len(), old_values.len(), "value target length mismatch");
    a_mod
        .iter()
        .zip(old_values.iter())
        .map(|(a, v)| a + v)
        .collect()
}
