//! Re-run the gain controller over a recorded advantage trace. The input
//! CSV has one advantage per row grouped by iteration; the output CSV has
//! one controller snapshot per iteration. Useful for studying controller
//! settings offline against advantages logged from a real run.
//!
//!     cargo run --example replay_trace

use am_ppo::modulation::ModulationConfig;
use am_ppo::replay::replay_controller;
use std::fmt::Write as _;

fn main() -> am_ppo::Result<()> {
    // A synthetic trace: advantages shrink as a run converges.
    let dir = std::env::temp_dir().join("am-ppo-replay-example");
    std::fs::create_dir_all(&dir).expect("temp dir is writable");
    let trace_path = dir.join("advantages.csv");
    let mut text = String::from("iteration,value\n");
    for iteration in 1..=12u32 {
        let scale = 4.0 / f64::from(iteration);
        for k in 0..32 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let value = sign * scale * (1.0 + f64::from(k) / 8.0);
            writeln!(text, "{iteration},{value}").unwrap();
        }
    }
    std::fs::write(&trace_path, text).expect("trace file is writable");

    let out_path = dir.join("controller.csv");
    let rows = replay_controller(&trace_path, &ModulationConfig::default(), &out_path)?;

    println!("replayed {} iteration groups from {}", rows.len(), trace_path.display());
    println!(
        "{:>4}  {:>10}  {:>9}  {:>9}  {:>14}",
        "iter", "alpha_ema", "sat_cur", "sat_ema", "mean|gated|"
    );
    for row in &rows {
        println!(
            "{:>4}  {:>10.4}  {:>9.4}  {:>9.4}  {:>14.4}",
            row.iteration, row.alpha_ema, row.sat_current, row.sat_ema, row.mean_abs_a_mod
        );
    }
    println!("full CSV at {}", out_path.display());
    Ok(())
}
