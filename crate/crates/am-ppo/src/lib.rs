//! Proximal policy optimization with adaptively modulated advantages, plus
//! the plain-PPO baseline it extends, on built-in point-mass control tasks.
//!
//! The crate is self-contained: networks, gradients, and the optimizer are
//! implemented here in f64 with no tensor framework. Runs are deterministic
//! down to the byte given a seed.
//!
//! Layered bottom-up:
//!
//! * [`nn`], [`gaussian`], [`optim`] - dense nets with hand-written reverse
//!   passes, the Gaussian policy head, Adam, and global gradient clipping
//! * [`env`] - the point-mass tasks
//! * [`rollout`] - trajectory collection, TD errors, GAE
//! * [`modulation`] - the adaptive advantage gate and its feedback
//!   controller, the part that distinguishes am_ppo from ppo
//! * [`update`] - clipped surrogate and value losses, the epoch/minibatch
//!   loop
//! * [`config`], [`train`], [`checkpoint`], [`replay`] - run plumbing and
//!   artifacts
//!
//! The `examples/` directory demonstrates each capability end to end; the
//! `am-ppo` binary exposes `train`, `eval`, and `replay-controller`.

pub mod checkpoint;
pub mod config;
pub mod env;
pub mod error;
pub mod gaussian;
pub mod modulation;
pub mod nn;
pub mod optim;
pub mod replay;
pub mod rng;
pub mod rollout;
pub mod train;
pub mod update;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use train::{evaluate, resume, train, TrainSession};
