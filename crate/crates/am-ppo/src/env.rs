//! Built-in point-mass control tasks.
//!
//! A unit mass starts at a uniform random position with zero velocity and is
//! pushed around by a bounded force. The quadratic cost on position,
//! velocity, and effort means reward is never positive and the best play is
//! to park at the origin. Episodes are exactly `HORIZON` steps; the horizon
//! cut counts as a terminal for bootstrapping purposes.

use crate::error::{Error, Result};
use crate::rng::RngState;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const DT: f64 = 0.05;
pub const HORIZON: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvId {
    PointMass1d,
    PointMass2d,
}

impl EnvId {
    pub fn dims(self) -> usize {
        match self {
            EnvId::PointMass1d => 1,
            EnvId::PointMass2d => 2,
        }
    }

    /// Observation is position then velocity per spatial dimension.
    pub fn obs_dim(self) -> usize {
        2 * self.dims()
    }

    pub fn act_dim(self) -> usize {
        self.dims()
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointmass1d" => Ok(EnvId::PointMass1d),
            "pointmass2d" => Ok(EnvId::PointMass2d),
            other => Err(Error::config(
                "env_id",
                format!("unknown environment '{other}' (expected pointmass1d or pointmass2d)"),
            )),
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvId::PointMass1d => write!(f, "pointmass1d"),
            EnvId::PointMass2d => write!(f, "pointmass2d"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub next_observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// One environment instance. Owns its reset generator so auto-resets inside
/// a rollout stay reproducible.
#[derive(Debug, Clone)]
pub struct EnvState {
    pub id: EnvId,
    pos: Vec<f64>,
    vel: Vec<f64>,
    steps_elapsed: usize,
    rng: ChaCha8Rng,
}

impl EnvState {
    pub fn new(id: EnvId, rng: ChaCha8Rng) -> Self {
        let mut env = EnvState {
            id,
            pos: vec![0.0; id.dims()],
            vel: vec![0.0; id.dims()],
            steps_elapsed: 0,
            rng,
        };
        env.reset();
        env
    }

    /// New episode: position uniform in (-1, 1) per dimension, velocity zero.
    pub fn reset(&mut self) -> Vec<f64> {
        for p in self.pos.iter_mut() {
            *p = self.rng.gen_range(-1.0..1.0);
        }
        self.vel.iter_mut().for_each(|v| *v = 0.0);
        self.steps_elapsed = 0;
        self.observation()
    }

    pub fn observation(&self) -> Vec<f64> {
        let mut obs = self.pos.clone();
        obs.extend_from_slice(&self.vel);
        obs
    }

    /// Semi-implicit-free Euler step: position moves under the old velocity,
    /// then velocity integrates the (clamped) force. Reward is the negative
    /// quadratic cost of the state after the step plus an effort penalty.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        assert_eq!(action.len(), self.id.act_dim(), "action dimension mismatch");
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::Numeric("non-finite action passed to env step".into()));
        }
        let a: Vec<f64> = action.iter().map(|x| x.clamp(-1.0, 1.0)).collect();
        for d in 0..self.pos.len() {
            self.pos[d] += self.vel[d] * DT;
            self.vel[d] += a[d] * DT;
        }
        let pos_sq: f64 = self.pos.iter().map(|x| x * x).sum();
        let vel_sq: f64 = self.vel.iter().map(|x| x * x).sum();
        let act_sq: f64 = a.iter().map(|x| x * x).sum();
        let reward = -(pos_sq + 0.1 * vel_sq + 0.001 * act_sq);
        self.steps_elapsed += 1;
        let done = self.steps_elapsed >= HORIZON;
        let next_observation = self.observation();
        if next_observation.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite observation in env step".into()));
        }
        Ok(StepResult {
            next_observation,
            reward,
            done,
        })
    }

    pub fn snapshot(&self) -> EnvSnapshot {
        EnvSnapshot {
            pos: self.pos.clone(),
            vel: self.vel.clone(),
            steps_elapsed: self.steps_elapsed,
            rng: RngState::capture(&self.rng),
        }
    }

    pub fn restore(id: EnvId, snap: &EnvSnapshot) -> Result<Self> {
        if snap.pos.len() != id.dims() || snap.vel.len() != id.dims() {
            return Err(Error::Checkpoint("environment state dimension mismatch".into()));
        }
        Ok(EnvState {
            id,
            pos: snap.pos.clone(),
            vel: snap.vel.clone(),
            steps_elapsed: snap.steps_elapsed,
            rng: snap.rng.restore()?,
        })
    }
}

/// Serializable mid-episode environment state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSnapshot {
    pub pos: Vec<f64>,
    pub vel: Vec<f64>,
    pub steps_elapsed: usize,
    pub rng: RngState,
}
