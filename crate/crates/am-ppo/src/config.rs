//! Run configuration: flat TOML keys, defaults, validation, and the
//! `config.resolved` emitter.
//!
//! Defaults are the standard AM-PPO hyperparameters. Three knobs have no
//! standard setting and default to this implementation's choices: `lr`
//! (3e-4), `hidden_dim` (64), and `norm_adv` (true). The resolved file a
//! training run writes says so in its header.

use crate::env::EnvId;
use crate::error::{Error, Result};
use crate::modulation::ModulationConfig;
use crate::update::{Algo, UpdateConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env_id: String,
    pub algo: Algo,
    pub seed: u64,
    pub total_timesteps: u64,
    pub n_steps: usize,
    pub n_envs: usize,
    pub hidden_dim: usize,
    pub lr: f64,
    pub anneal_lr: bool,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub n_minibatches: usize,
    pub n_epochs: usize,
    pub clip_eps: f64,
    pub clip_vloss: bool,
    pub norm_adv: bool,
    pub ent_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    pub kappa_shared: f64,
    pub tau: f64,
    pub p_star: f64,
    pub eta: f64,
    pub rho_alpha: f64,
    pub rho_sat: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub eps_a: f64,
    pub alpha_init: f64,
    pub sat_init: f64,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModulationConfig::default();
        RunConfig {
            env_id: "pointmass1d".to_string(),
            algo: Algo::AmPpo,
            seed: 1,
            total_timesteps: 1_000_000,
            n_steps: 2048,
            n_envs: 1,
            hidden_dim: 64,
            lr: 3e-4,
            anneal_lr: true,
            gamma: 0.99,
            gae_lambda: 0.95,
            n_minibatches: 32,
            n_epochs: 10,
            clip_eps: 0.2,
            clip_vloss: true,
            norm_adv: true,
            ent_coef: 0.0,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            kappa_shared: m.kappa_shared,
            tau: m.tau,
            p_star: m.p_star,
            eta: m.eta,
            rho_alpha: m.rho_alpha,
            rho_sat: m.rho_sat,
            alpha_min: m.alpha_min,
            alpha_max: m.alpha_max,
            eps_a: m.eps_a,
            alpha_init: m.alpha_init,
            sat_init: m.sat_init,
            out_dir: "runs/run".to_string(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config("config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn env(&self) -> Result<EnvId> {
        self.env_id.parse()
    }

    pub fn batch_size(&self) -> usize {
        self.n_steps * self.n_envs
    }

    pub fn num_iterations(&self) -> u64 {
        self.total_timesteps / self.batch_size() as u64
    }

    pub fn modulation(&self) -> ModulationConfig {
        ModulationConfig {
            kappa_shared: self.kappa_shared,
            tau: self.tau,
            p_star: self.p_star,
            eta: self.eta,
            rho_alpha: self.rho_alpha,
            rho_sat: self.rho_sat,
            alpha_min: self.alpha_min,
            alpha_max: self.alpha_max,
            eps_a: self.eps_a,
            alpha_init: self.alpha_init,
            sat_init: self.sat_init,
        }
    }

    pub fn update(&self) -> UpdateConfig {
        UpdateConfig {
            algo: self.algo,
            clip_eps: self.clip_eps,
            vf_coef: self.vf_coef,
            ent_coef: self.ent_coef,
            n_epochs: self.n_epochs,
            n_minibatches: self.n_minibatches,
            norm_adv: self.norm_adv,
            clip_vloss: self.clip_vloss,
            max_grad_norm: self.max_grad_norm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env()?;
        if self.n_steps == 0 {
            return Err(Error::config("n_steps", "must be >= 1"));
        }
        if self.n_envs == 0 {
            return Err(Error::config("n_envs", "must be >= 1"));
        }
        if self.hidden_dim == 0 {
            return Err(Error::config("hidden_dim", "must be >= 1"));
        }
        if self.total_timesteps < self.batch_size() as u64 {
            return Err(Error::config(
                "total_timesteps",
                format!(
                    "must cover at least one iteration of n_steps * n_envs = {}",
                    self.batch_size()
                ),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", "must be > 0"));
        }
        if !(self.gamma >= 0.0 && self.gamma <= 1.0) {
            return Err(Error::config("gamma", "must be in [0, 1]"));
        }
        if !(self.gae_lambda >= 0.0 && self.gae_lambda <= 1.0) {
            return Err(Error::config("gae_lambda", "must be in [0, 1]"));
        }
        if self.n_minibatches == 0 || self.batch_size() % self.n_minibatches != 0 {
            return Err(Error::config(
                "n_minibatches",
                format!(
                    "{} must divide n_steps * n_envs = {}",
                    self.n_minibatches,
                    self.batch_size()
                ),
            ));
        }
        if self.n_epochs == 0 {
            return Err(Error::config("n_epochs", "must be >= 1"));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(Error::config("clip_eps", "must be in (0, 1)"));
        }
        if !(self.ent_coef >= 0.0) {
            return Err(Error::config("ent_coef", "must be >= 0"));
        }
        if !(self.vf_coef >= 0.0) {
            return Err(Error::config("vf_coef", "must be >= 0"));
        }
        if !(self.max_grad_norm > 0.0) {
            return Err(Error::config("max_grad_norm", "must be > 0"));
        }
        if self.out_dir.is_empty() {
            return Err(Error::config("out_dir", "must not be empty"));
        }
        self.modulation().validate()?;
        Ok(())
    }

    /// TOML text of the fully resolved configuration, written as
    /// `config.resolved` at the start of every training run.
    pub fn to_resolved_toml(&self) -> String {
        let body = toml::to_string(self).expect("config serializes");
        let mut text = String::new();
        text.push_str("# Resolved run configuration: defaults, then config file, then flags.\n");
        text.push_str("# lr, hidden_dim, and norm_adv have no standard AM-PPO setting; their\n");
        text.push_str("# defaults are this implementation's choices.\n");
        text.push_str(&body);
        text
    }
}
