//! Diagonal Gaussian policy head: log-density, entropy, sampling, and the
//! analytic derivatives the update step backpropagates through.

use crate::rng::standard_normal;
use rand_chacha::ChaCha8Rng;

const LN_2PI: f64 = 1.8378770664093453; // ln(2*pi)

/// Log-density of `action` under N(mean, diag(exp(log_std))^2), summed over
/// dimensions.
pub fn log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    assert_eq!(mean.len(), log_std.len(), "mean/log_std length mismatch");
    assert_eq!(mean.len(), action.len(), "mean/action length mismatch");
    let mut lp = 0.0;
    for d in 0..mean.len() {
        let z = (action[d] - mean[d]) / log_std[d].exp();
        lp += -0.5 * z * z - log_std[d] - 0.5 * LN_2PI;
    }
    lp
}

/// Differential entropy, summed over dimensions. Depends only on log_std:
/// sum_d (0.5 * (1 + ln 2*pi) + log_std_d).
pub fn entropy(log_std: &[f64]) -> f64 {
    log_std
        .iter()
        .map(|s| 0.5 * (1.0 + LN_2PI) + s)
        .sum()
}

/// Draw mean + std * z with z standard normal, one draw per dimension.
pub fn sample(mean: &[f64], log_std: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    assert_eq!(mean.len(), log_std.len(), "mean/log_std length mismatch");
    mean.iter()
        .zip(log_std.iter())
        .map(|(&mu, &s)| mu + s.exp() * standard_normal(rng))
        .collect()
}

/// d(log_prob)/d(mean_d) and d(log_prob)/d(log_std_d) at fixed action.
///
/// With u = (a - mu)/sigma: d/dmu = u/sigma, d/dlog_std = u^2 - 1.
pub fn log_prob_grad(mean: &[f64], log_std: &[f64], action: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(mean.len(), log_std.len(), "mean/log_std length mismatch");
    assert_eq!(mean.len(), action.len(), "mean/action length mismatch");
    let mut d_mean = vec![0.0; mean.len()];
    let mut d_log_std = vec![0.0; mean.len()];
    for d in 0..mean.len() {
        let sigma = log_std[d].exp();
        let u = (action[d] - mean[d]) / sigma;
        d_mean[d] = u / sigma;
        d_log_std[d] = u * u - 1.0;
    }
    (d_mean, d_log_std)
}
