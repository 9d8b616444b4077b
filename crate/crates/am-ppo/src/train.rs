//! Training, evaluation, and run artifacts.
//!
//! A training run writes three files into its output directory:
//!
//! * `config.resolved` - the full configuration after defaults and overrides
//! * `metrics.jsonl`   - one JSON object per iteration, LF line endings
//! * `checkpoint.final` - complete state at the end (or at the last healthy
//!   iteration if the run aborted on a numeric error)
//!
//! Runs are deterministic: a (config, seed) pair fixes every byte of
//! metrics.jsonl, and resuming from a checkpoint continues the exact
//! trajectory the uninterrupted run would have taken.

use crate::checkpoint::{Checkpoint, CHECKPOINT_VERSION};
use crate::config::RunConfig;
use crate::env::{EnvId, EnvState, HORIZON};
use crate::error::{Error, Result};
use crate::modulation::{update_controller, ControllerState};
use crate::nn::ActorCritic;
use crate::rng;
use crate::rollout::{collect, gae};
use crate::update::{run_update, Algo, MetricsRecord};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Live state of a run between iterations.
pub struct TrainSession {
    pub cfg: RunConfig,
    pub model: ActorCritic,
    pub envs: Vec<EnvState>,
    pub ctrl: ControllerState,
    action_rng: ChaCha8Rng,
    shuffle_rng: ChaCha8Rng,
    pub iteration: u64,
    pub global_step: u64,
    ep_running_return: Vec<f64>,
    last_mean_episodic_return: f64,
}

impl TrainSession {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let env_id = cfg.env()?;
        let mut init_rng = rng::stream(cfg.seed, rng::STREAM_PARAM_INIT);
        let model = ActorCritic::new(
            env_id.obs_dim(),
            env_id.act_dim(),
            cfg.hidden_dim,
            &mut init_rng,
        );
        let envs: Vec<EnvState> = (0..cfg.n_envs)
            .map(|e| EnvState::new(env_id, rng::env_stream(cfg.seed, e)))
            .collect();
        let ctrl = ControllerState::new(&cfg.modulation());
        let action_rng = rng::stream(cfg.seed, rng::STREAM_ACTIONS);
        let shuffle_rng = rng::stream(cfg.seed, rng::STREAM_SHUFFLE);
        let n_envs = cfg.n_envs;
        Ok(TrainSession {
            cfg,
            model,
            envs,
            ctrl,
            action_rng,
            shuffle_rng,
            iteration: 0,
            global_step: 0,
            ep_running_return: vec![0.0; n_envs],
            last_mean_episodic_return: 0.0,
        })
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        ckpt.config.validate()?;
        let env_id = ckpt.config.env()?;
        let mut init_rng = rng::stream(ckpt.config.seed, rng::STREAM_PARAM_INIT);
        let mut model = ActorCritic::new(
            env_id.obs_dim(),
            env_id.act_dim(),
            ckpt.config.hidden_dim,
            &mut init_rng,
        );
        ckpt.restore_params(&mut model)?;
        if ckpt.envs.len() != ckpt.config.n_envs
            || ckpt.ep_running_return.len() != ckpt.config.n_envs
        {
            return Err(Error::Checkpoint("environment count mismatch".into()));
        }
        let envs = ckpt
            .envs
            .iter()
            .map(|snap| EnvState::restore(env_id, snap))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainSession {
            cfg: ckpt.config.clone(),
            model,
            envs,
            ctrl: ckpt.controller.clone(),
            action_rng: ckpt.action_rng.restore()?,
            shuffle_rng: ckpt.shuffle_rng.restore()?,
            iteration: ckpt.iteration,
            global_step: ckpt.global_step,
            ep_running_return: ckpt.ep_running_return.clone(),
            last_mean_episodic_return: ckpt.last_mean_episodic_return,
        })
    }

    pub fn num_iterations(&self) -> u64 {
        self.cfg.num_iterations()
    }

    /// Learning rate for a 1-based iteration index: linear decay toward zero
    /// across the whole run when annealing is on.
    fn lr_for_iteration(&self, iteration: u64) -> f64 {
        if self.cfg.anneal_lr {
            let frac = 1.0 - (iteration - 1) as f64 / self.num_iterations() as f64;
            self.cfg.lr * frac
        } else {
            self.cfg.lr
        }
    }

    /// Collect one rollout, update the controller (am_ppo only), run the
    /// epoch/minibatch updates, and return this iteration's metrics line.
    pub fn run_iteration(&mut self) -> Result<MetricsRecord> {
        self.iteration += 1;
        let lr_current = self.lr_for_iteration(self.iteration);

        let buf = collect(
            &self.model,
            &mut self.envs,
            self.cfg.n_steps,
            &mut self.action_rng,
        )?;

        // Episodic return bookkeeping from the freshly collected batch.
        let mut completed: Vec<f64> = Vec::new();
        for t in 0..buf.n_steps {
            for e in 0..buf.n_envs {
                let i = buf.flat_index(t, e);
                self.ep_running_return[e] += buf.rewards[i];
                if buf.dones[i] {
                    completed.push(self.ep_running_return[e]);
                    self.ep_running_return[e] = 0.0;
                }
            }
        }
        if !completed.is_empty() {
            self.last_mean_episodic_return =
                completed.iter().sum::<f64>() / completed.len() as f64;
        }

        let adv = gae(&buf, self.cfg.gamma, self.cfg.gae_lambda);

        let mod_cfg = self.cfg.modulation();
        let sat_current = match self.cfg.algo {
            Algo::AmPpo => update_controller(&mut self.ctrl, &adv.advantages, &mod_cfg)?.sat_current,
            Algo::Ppo => 0.0,
        };

        let stats = run_update(
            &mut self.model,
            &buf,
            &adv,
            &self.ctrl,
            &self.cfg.update(),
            &mod_cfg,
            lr_current,
            &mut self.shuffle_rng,
        )?;

        self.global_step += self.cfg.batch_size() as u64;

        Ok(MetricsRecord {
            iteration: self.iteration,
            global_step: self.global_step,
            mean_episodic_return: self.last_mean_episodic_return,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            alpha_ema: self.ctrl.alpha_ema,
            sat_ema: self.ctrl.sat_ema,
            sat_current,
            ratio_clip_fraction: stats.ratio_clip_fraction,
            grad_norm_preclip: stats.grad_norm_preclip,
            lr_current,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config: self.cfg.clone(),
            iteration: self.iteration,
            global_step: self.global_step,
            tensors: Checkpoint::capture_params(&self.model.params),
            adam_t: self.model.params.adam_t,
            controller: self.ctrl.clone(),
            action_rng: rng::RngState::capture(&self.action_rng),
            shuffle_rng: rng::RngState::capture(&self.shuffle_rng),
            envs: self.envs.iter().map(EnvState::snapshot).collect(),
            ep_running_return: self.ep_running_return.clone(),
            last_mean_episodic_return: self.last_mean_episodic_return,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub out_dir: PathBuf,
    pub iterations: u64,
    pub global_step: u64,
    pub final_mean_episodic_return: f64,
}

/// Run training to completion, writing config.resolved, metrics.jsonl, and
/// checkpoint.final into the config's output directory.
pub fn train(cfg: RunConfig) -> Result<TrainOutcome> {
    let session = TrainSession::new(cfg)?;
    run_session(session)
}

/// Continue a checkpointed run until its configured total_timesteps.
/// `out_dir` redirects the artifacts; `total_timesteps` extends or shortens
/// the horizon. Artifacts in the new directory cover only the resumed part.
pub fn resume(
    ckpt_path: &Path,
    out_dir: Option<String>,
    total_timesteps: Option<u64>,
) -> Result<TrainOutcome> {
    let ckpt = Checkpoint::load(ckpt_path)?;
    let mut session = TrainSession::from_checkpoint(&ckpt)?;
    if let Some(dir) = out_dir {
        session.cfg.out_dir = dir;
    }
    if let Some(total) = total_timesteps {
        session.cfg.total_timesteps = total;
    }
    session.cfg.validate()?;
    run_session(session)
}

fn run_session(mut session: TrainSession) -> Result<TrainOutcome> {
    let out_dir = PathBuf::from(&session.cfg.out_dir);
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("config.resolved"), session.cfg.to_resolved_toml())?;

    let metrics_file = fs::File::create(out_dir.join("metrics.jsonl"))?;
    let mut metrics = BufWriter::new(metrics_file);

    // Snapshot of the last healthy iteration boundary, persisted on aborts.
    let mut last_good = session.checkpoint();
    let mut aborted: Option<Error> = None;

    while session.iteration < session.num_iterations() {
        match session.run_iteration() {
            Ok(record) => {
                let line = serde_json::to_string(&record)
                    .map_err(|e| Error::Numeric(format!("metrics serialize: {e}")))?;
                metrics.write_all(line.as_bytes())?;
                metrics.write_all(b"\n")?;
                last_good = session.checkpoint();
            }
            Err(e) => {
                aborted = Some(e);
                break;
            }
        }
    }
    metrics.flush()?;
    last_good.save(&out_dir.join("checkpoint.final"))?;

    if let Some(e) = aborted {
        return Err(e);
    }
    Ok(TrainOutcome {
        out_dir,
        iterations: session.iteration,
        global_step: session.global_step,
        final_mean_episodic_return: session.last_mean_episodic_return,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: u64,
    pub seed: u64,
    pub mean_return: f64,
    pub std_return: f64,
}

/// Roll out the deterministic policy (action = mean) from a checkpoint.
/// Episode k uses the environment stream of `seed` with index k, writes
/// eval.json next to the checkpoint, and returns the summary.
pub fn evaluate(ckpt_path: &Path, episodes: u64, seed: u64) -> Result<EvalSummary> {
    if episodes == 0 {
        return Err(Error::config("episodes", "must be >= 1"));
    }
    let ckpt = Checkpoint::load(ckpt_path)?;
    let env_id = ckpt.config.env()?;
    let mut init_rng = rng::stream(ckpt.config.seed, rng::STREAM_PARAM_INIT);
    let mut model = ActorCritic::new(
        env_id.obs_dim(),
        env_id.act_dim(),
        ckpt.config.hidden_dim,
        &mut init_rng,
    );
    ckpt.restore_params(&mut model)?;

    let returns: Vec<f64> = (0..episodes)
        .map(|ep| deterministic_episode_return(&model, env_id, seed, ep as usize))
        .collect::<Result<Vec<f64>>>()?;
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    let std = if returns.len() > 1 {
        let ss: f64 = returns.iter().map(|r| (r - mean) * (r - mean)).sum();
        (ss / (returns.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let summary = EvalSummary {
        episodes,
        seed,
        mean_return: mean,
        std_return: std,
    };
    let out = ckpt_path.parent().unwrap_or(Path::new(".")).join("eval.json");
    fs::write(&out, serde_json::to_string_pretty(&summary).unwrap() + "\n")?;
    Ok(summary)
}

fn deterministic_episode_return(
    model: &ActorCritic,
    env_id: EnvId,
    seed: u64,
    episode: usize,
) -> Result<f64> {
    let mut env = EnvState::new(env_id, rng::env_stream(seed, episode));
    let mut total = 0.0;
    for _ in 0..HORIZON {
        let action = model.policy_mean(&env.observation());
        let step = env.step(&action)?;
        total += step.reward;
        if step.done {
            break;
        }
    }
    Ok(total)
}
