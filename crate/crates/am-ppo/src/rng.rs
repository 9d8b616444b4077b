//! Run-level randomness.
//!
//! Every run owns a single u64 seed. Independent ChaCha streams are derived
//! from it so that the consumers below never share state:
//!
//! * stream 0: parameter initialisation
//! * stream 1: action sampling during rollout collection
//! * stream 2: minibatch index shuffling
//! * stream 16 + k: environment k (reset noise)
//!
//! Stream state is cheap to snapshot (seed, stream id, word position), which
//! is what makes bit-exact checkpoint resume possible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const STREAM_PARAM_INIT: u64 = 0;
pub const STREAM_ACTIONS: u64 = 1;
pub const STREAM_SHUFFLE: u64 = 2;
pub const STREAM_ENV_BASE: u64 = 16;

/// Fresh generator for one of the documented streams of `seed`.
pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

pub fn env_stream(seed: u64, env_index: usize) -> ChaCha8Rng {
    stream(seed, STREAM_ENV_BASE + env_index as u64)
}

/// Standard normal draw via Box-Muller. Stateless (the sine twin is
/// discarded), so a generator's word position fully describes it.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // gen::<f64>() is in [0, 1); flip so the log argument is in (0, 1].
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Serializable snapshot of a ChaCha stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: Vec<u8>,
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed().to_vec(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> crate::error::Result<ChaCha8Rng> {
        let seed: [u8; 32] = self
            .seed
            .as_slice()
            .try_into()
            .map_err(|_| crate::error::Error::Checkpoint("rng seed must be 32 bytes".into()))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        Ok(rng)
    }
}
