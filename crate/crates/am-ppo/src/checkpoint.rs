//! Bit-exact run snapshots.
//!
//! A checkpoint holds everything a run needs to continue as if it had never
//! stopped: parameters with their Adam moments, the modulation controller,
//! every RNG stream position, per-environment physics state, and the
//! episodic-return accounting. Serialization is versioned JSON; f64 values
//! are written with shortest-round-trip formatting, so load(save(x)) == x
//! exactly.

use crate::config::RunConfig;
use crate::env::EnvSnapshot;
use crate::error::{Error, Result};
use crate::modulation::ControllerState;
use crate::nn::{ActorCritic, ParamSet};
use crate::rng::RngState;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSnapshot {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: RunConfig,
    /// Completed iterations.
    pub iteration: u64,
    pub global_step: u64,
    pub tensors: Vec<TensorSnapshot>,
    pub adam_t: u64,
    pub controller: ControllerState,
    pub action_rng: RngState,
    pub shuffle_rng: RngState,
    pub envs: Vec<EnvSnapshot>,
    /// Return accumulated so far in each environment's open episode.
    pub ep_running_return: Vec<f64>,
    /// Last reported mean episodic return, carried into iterations that
    /// complete no episode.
    pub last_mean_episodic_return: f64,
}

impl Checkpoint {
    pub fn capture_params(params: &ParamSet) -> Vec<TensorSnapshot> {
        params
            .tensors
            .iter()
            .map(|t| TensorSnapshot {
                rows: t.rows,
                cols: t.cols,
                data: t.data.clone(),
                m: t.m.clone(),
                v: t.v.clone(),
            })
            .collect()
    }

    /// Overwrite a freshly built model's tensors with the snapshot.
    pub fn restore_params(&self, model: &mut ActorCritic) -> Result<()> {
        if self.tensors.len() != model.params.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "tensor count mismatch: checkpoint has {}, model has {}",
                self.tensors.len(),
                model.params.tensors.len()
            )));
        }
        for (dst, src) in model.params.tensors.iter_mut().zip(self.tensors.iter()) {
            if dst.rows != src.rows || dst.cols != src.cols || src.data.len() != dst.len() {
                return Err(Error::Checkpoint("tensor shape mismatch".into()));
            }
            if src.m.len() != src.data.len() || src.v.len() != src.data.len() {
                return Err(Error::Checkpoint("moment length mismatch".into()));
            }
            dst.data.copy_from_slice(&src.data);
            dst.m.copy_from_slice(&src.m);
            dst.v.copy_from_slice(&src.v);
        }
        model.params.adam_t = self.adam_t;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)
            .map_err(|e| Error::Checkpoint(format!("serialize: {e}")))?;
        let mut f = fs::File::create(path)?;
        f.write_all(json.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Checkpoint(format!("cannot read {}: {e}", path.display()))
        })?;
        // Check the version tag before insisting on the full schema.
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Checkpoint(format!("parse {}: {e}", path.display())))?;
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Checkpoint("missing version tag".into()))?;
        if version != CHECKPOINT_VERSION as u64 {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
            )));
        }
        serde_json::from_value(value)
            .map_err(|e| Error::Checkpoint(format!("parse {}: {e}", path.display())))
    }
}
