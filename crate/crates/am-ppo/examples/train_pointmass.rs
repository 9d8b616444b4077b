//! Smallest end-to-end training run: adaptive-gate PPO on the 1-D point
//! mass, short budget, artifacts in runs/example-train.
//!
//!     cargo run --release --example train_pointmass

use am_ppo::{train, RunConfig};

fn main() -> am_ppo::Result<()> {
    let cfg = RunConfig {
        total_timesteps: 32_768,
        n_steps: 1024,
        n_minibatches: 8,
        seed: 7,
        out_dir: "runs/example-train".to_string(),
        ..RunConfig::default()
    };
    let iterations = cfg.num_iterations();
    println!(
        "training {} on {} for {} iterations of {} steps",
        cfg.algo, cfg.env_id, iterations, cfg.n_steps
    );

    let outcome = train(cfg)?;

    println!(
        "done: {} steps, final mean episodic return {:.2}",
        outcome.global_step, outcome.final_mean_episodic_return
    );
    println!("artifacts in {}", outcome.out_dir.display());
    println!("inspect with: jq . {}/metrics.jsonl", outcome.out_dir.display());
    Ok(())
}
