//! Train briefly, then roll out the deterministic greedy policy (action =
//! mean, no exploration noise) from the saved checkpoint. Evaluation has
//! its own seed and episode count and writes eval.json next to the
//! checkpoint.
//!
//!     cargo run --release --example evaluate_policy

use am_ppo::{evaluate, train, RunConfig};

fn main() -> am_ppo::Result<()> {
    let cfg = RunConfig {
        total_timesteps: 32_768,
        n_steps: 1024,
        n_minibatches: 8,
        seed: 2,
        out_dir: "runs/example-eval".to_string(),
        ..RunConfig::default()
    };
    let outcome = train(cfg)?;
    println!(
        "trained {} iterations, stochastic-policy return {:.2}",
        outcome.iterations, outcome.final_mean_episodic_return
    );

    let ckpt = outcome.out_dir.join("checkpoint.final");
    for seed in [100, 200] {
        let summary = evaluate(&ckpt, 16, seed)?;
        println!(
            "greedy eval, seed {seed}: mean return {:.3} (std {:.3} over {} episodes)",
            summary.mean_return, summary.std_return, summary.episodes
        );
    }
    println!("summary written to {}", outcome.out_dir.join("eval.json").display());
    Ok(())
}
