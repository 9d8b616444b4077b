//! Show what the gate does to a single batch of raw advantages at a few
//! fixed gains. Low gain suppresses everything toward zero; high gain
//! saturates the tanh and the output approaches +/- kappa * |a|. Sign is
//! always preserved and magnitudes never exceed kappa * |a|.
//!
//!     cargo run --example modulate_batch

use am_ppo::modulation::{modulate_minibatch, ModulationConfig};

fn main() {
    let cfg = ModulationConfig::default();
    let batch = [0.05, -0.2, 0.7, -1.5, 3.0, -6.0];
    let gains = [0.5, 2.0, 8.0, 64.0];

    print!("{:>8}", "raw");
    for g in gains {
        print!("  {:>9}", format!("alpha={g}"));
    }
    println!();

    let gated: Vec<Vec<f64>> = gains
        .iter()
        .map(|&g| modulate_minibatch(&batch, g, &cfg))
        .collect();
    for (i, a) in batch.iter().enumerate() {
        print!("{a:>8.2}");
        for col in &gated {
            print!("  {:>9.4}", col[i]);
        }
        println!();
    }
    println!();
    println!(
        "bound check: every |gated| <= kappa*|raw| with kappa = {}",
        cfg.kappa_shared
    );
}
