//! Drive the gain controller open loop, no training involved.
//!
//! Feeds the same synthetic advantage batch in every iteration and prints
//! the state converging to its fixed point, then switches to a batch with
//! much heavier tails and shows the controller re-settling. The gain rises
//! when too few entries saturate the gate and falls when too many do.
//!
//!     cargo run --example controller_dynamics

use am_ppo::modulation::{update_controller, ControllerState, ModulationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A light-tailed batch: uniform magnitudes, both signs.
fn uniform_batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// The same batch with a few entries blown up by 20x.
fn spiky_batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    uniform_batch(rng, n)
        .into_iter()
        .enumerate()
        .map(|(i, a)| if i % 16 == 0 { 20.0 * a } else { a })
        .collect()
}

fn main() -> am_ppo::Result<()> {
    let cfg = ModulationConfig::default();
    let mut state = ControllerState::new(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let light = uniform_batch(&mut rng, 256);
    let spiky = spiky_batch(&mut rng, 256);

    println!(
        "{:>4}  {:>7}  {:>10}  {:>10}  {:>9}  {:>9}",
        "iter", "batch", "alpha_hat", "alpha_ema", "sat_cur", "sat_ema"
    );
    for iter in 0..40 {
        let batch = if iter < 20 { &light } else { &spiky };
        let update = update_controller(&mut state, batch, &cfg)?;
        println!(
            "{:>4}  {:>7}  {:>10.3}  {:>10.3}  {:>9.4}  {:>9.4}",
            iter + 1,
            if iter < 20 { "light" } else { "spiky" },
            update.alpha_hat,
            state.alpha_ema,
            update.sat_current,
            state.sat_ema
        );
    }
    Ok(())
}
