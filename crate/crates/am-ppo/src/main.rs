//! Command-line frontend. All logic lives in the library; this binary only
//! parses flags, layers them over the config file, and maps errors to exit
//! codes (2 for usage/config/file problems, 3 for numeric aborts).

use am_ppo::config::RunConfig;
use am_ppo::error::Result;
use am_ppo::{evaluate, replay, resume, train, update::Algo};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "am-ppo", version, about = "Train and inspect AM-PPO / PPO agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy; writes config.resolved, metrics.jsonl, checkpoint.final.
    Train(TrainArgs),
    /// Roll out the deterministic policy from a checkpoint.
    Eval(EvalArgs),
    /// Replay a recorded advantage trace through the modulation controller.
    ReplayController(ReplayArgs),
}

/// Flags mirror the config keys one-to-one; anything set here overrides the
/// config file, which overrides the built-in defaults.
#[derive(Args)]
struct TrainArgs {
    /// TOML config file with flat keys matching these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Continue from a checkpoint instead of starting fresh (ignores --config).
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Output directory for run artifacts.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    env_id: Option<String>,
    /// ppo or am-ppo.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    total_timesteps: Option<u64>,
    #[arg(long)]
    n_steps: Option<usize>,
    #[arg(long)]
    n_envs: Option<usize>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    anneal_lr: Option<bool>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gae_lambda: Option<f64>,
    #[arg(long)]
    n_minibatches: Option<usize>,
    #[arg(long)]
    n_epochs: Option<usize>,
    #[arg(long)]
    clip_eps: Option<f64>,
    #[arg(long)]
    clip_vloss: Option<bool>,
    #[arg(long)]
    norm_adv: Option<bool>,
    #[arg(long)]
    ent_coef: Option<f64>,
    #[arg(long)]
    vf_coef: Option<f64>,
    #[arg(long)]
    max_grad_norm: Option<f64>,
    #[arg(long)]
    kappa_shared: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    p_star: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    rho_alpha: Option<f64>,
    #[arg(long)]
    rho_sat: Option<f64>,
    #[arg(long)]
    alpha_min: Option<f64>,
    #[arg(long)]
    alpha_max: Option<f64>,
    #[arg(long)]
    eps_a: Option<f64>,
    #[arg(long)]
    alpha_init: Option<f64>,
    #[arg(long)]
    sat_init: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    /// Path to a checkpoint.final file.
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value_t = 10)]
    episodes: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReplayArgs {
    /// CSV trace with header "iteration,value".
    #[arg(long)]
    trace: PathBuf,
    /// Optional config file supplying the controller constants.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path; defaults to the trace path with a .replay.csv suffix.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TrainArgs {
    fn build_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = &self.env_id {
            cfg.env_id = v.clone();
        }
        if let Some(v) = &self.algo {
            cfg.algo = v.parse::<Algo>()?;
        }
        macro_rules! set {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = self.$field {
                    cfg.$field = v;
                })*
            };
        }
        set!(
            seed,
            total_timesteps,
            n_steps,
            n_envs,
            hidden_dim,
            lr,
            anneal_lr,
            gamma,
            gae_lambda,
            n_minibatches,
            n_epochs,
            clip_eps,
            clip_vloss,
            norm_adv,
            ent_coef,
            vf_coef,
            max_grad_norm,
            kappa_shared,
            tau,
            p_star,
            eta,
            rho_alpha,
            rho_sat,
            alpha_min,
            alpha_max,
            eps_a,
            alpha_init,
            sat_init,
        );
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let outcome = if let Some(ckpt) = &args.resume {
                resume(ckpt, args.out.clone(), args.total_timesteps)?
            } else {
                train(args.build_config()?)?
            };
            println!(
                "trained {} iterations ({} steps); mean episodic return {:.3}; artifacts in {}",
                outcome.iterations,
                outcome.global_step,
                outcome.final_mean_episodic_return,
                outcome.out_dir.display()
            );
            Ok(())
        }
        Command::Eval(args) => {
            let summary = evaluate(&args.checkpoint, args.episodes, args.seed)?;
            println!(
                "eval over {} episodes (seed {}): mean return {:.6}, std {:.6}",
                summary.episodes, summary.seed, summary.mean_return, summary.std_return
            );
            Ok(())
        }
        Command::ReplayController(args) => {
            let cfg = match &args.config {
                Some(path) => {
                    let run_cfg = RunConfig::from_file(path)?;
                    run_cfg.validate()?;
                    run_cfg.modulation()
                }
                None => Default::default(),
            };
            let out = args.out.clone().unwrap_or_else(|| {
                let mut p = args.trace.as_os_str().to_owned();
                p.push(".replay.csv");
                PathBuf::from(p)
            });
            let rows = replay::replay_controller(&args.trace, &cfg, &out)?;
            println!("replayed {} iteration groups -> {}", rows.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
