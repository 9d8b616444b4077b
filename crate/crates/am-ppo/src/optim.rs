//! Adam with bias correction and global gradient-norm clipping, both over a
//! whole `ParamSet` so the policy head, value head, and log-std move under
//! one optimizer.

use crate::error::{Error, Result};
use crate::nn::ParamSet;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// L2 norm of all gradients taken together. If it exceeds `max_norm`, every
/// gradient is scaled by `max_norm / norm`. Returns the pre-clip norm.
pub fn clip_global_grad_norm(params: &mut ParamSet, max_norm: f64) -> f64 {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let mut sq = 0.0;
    for t in &params.tensors {
        for g in &t.grad {
            sq += g * g;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for t in &mut params.tensors {
            for g in &mut t.grad {
                *g *= scale;
            }
        }
    }
    norm
}

/// One Adam step over every tensor, using the current gradients.
///
/// Moments update first (m, v EMAs of g and g^2), then the bias-corrected
/// step lr * m_hat / (sqrt(v_hat) + eps) is subtracted. Errors out, leaving
/// no partial write, if any gradient is non-finite; errors after the fact if
/// a parameter became non-finite.
pub fn adam_step(params: &mut ParamSet, lr: f64) -> Result<()> {
    for t in &params.tensors {
        if t.grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient in adam_step".into()));
        }
    }
    params.adam_t += 1;
    let t_step = params.adam_t as i32;
    let bc1 = 1.0 - ADAM_BETA1.powi(t_step);
    let bc2 = 1.0 - ADAM_BETA2.powi(t_step);
    for tensor in &mut params.tensors {
        for i in 0..tensor.len() {
            let g = tensor.grad[i];
            tensor.m[i] = ADAM_BETA1 * tensor.m[i] + (1.0 - ADAM_BETA1) * g;
            tensor.v[i] = ADAM_BETA2 * tensor.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = tensor.m[i] / bc1;
            let v_hat = tensor.v[i] / bc2;
            tensor.data[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    for tensor in &params.tensors {
        if tensor.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite parameter after adam_step".into()));
        }
    }
    Ok(())
}
