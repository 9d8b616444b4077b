//! Train the plain-PPO baseline and the adaptively gated variant on the
//! same seed and budget, then print their learning curves side by side.
//! At this scale the two mostly track each other; the interesting part is
//! the gate diagnostics on the right, which plain PPO holds constant.
//!
//!     cargo run --release --example compare_algos

use am_ppo::update::{Algo, MetricsRecord};
use am_ppo::{train, RunConfig};

fn run(algo: Algo) -> am_ppo::Result<Vec<MetricsRecord>> {
    let cfg = RunConfig {
        algo,
        total_timesteps: 49_152,
        n_steps: 1024,
        n_minibatches: 8,
        seed: 3,
        out_dir: format!("runs/example-compare-{algo}"),
        ..RunConfig::default()
    };
    let outcome = train(cfg)?;
    let text = std::fs::read_to_string(outcome.out_dir.join("metrics.jsonl"))
        .expect("metrics.jsonl was just written");
    Ok(text
        .lines()
        .map(|l| serde_json::from_str(l).expect("own metrics line parses"))
        .collect())
}

fn main() -> am_ppo::Result<()> {
    let ppo = run(Algo::Ppo)?;
    let am = run(Algo::AmPpo)?;

    println!(
        "{:>4}  {:>12}  {:>12}  {:>10}  {:>8}  {:>8}",
        "iter", "ppo return", "am return", "alpha_ema", "sat_ema", "sat_cur"
    );
    for (p, a) in ppo.iter().zip(am.iter()) {
        println!(
            "{:>4}  {:>12.1}  {:>12.1}  {:>10.3}  {:>8.3}  {:>8.3}",
            p.iteration,
            p.mean_episodic_return,
            a.mean_episodic_return,
            a.alpha_ema,
            a.sat_ema,
            a.sat_current
        );
    }
    Ok(())
}
