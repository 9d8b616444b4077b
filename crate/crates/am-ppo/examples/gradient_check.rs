//! Check the hand-written backward passes against central finite
//! differences on one small batch. The scalar objective is the full
//! training loss: clipped surrogate + vf_coef * clipped value loss -
//! ent_coef * entropy. Every sample here sits on the smooth branch of both
//! clips (ratio 1, old value equal to the current prediction), so the
//! numeric derivative is trustworthy at h = 1e-5.
//!
//!     cargo run --example gradient_check

use am_ppo::gaussian;
use am_ppo::nn::ActorCritic;
use am_ppo::rng;
use am_ppo::update::{policy_loss, policy_loss_terms, value_loss, value_loss_terms};
use rand::Rng;

const M: usize = 8;
const CLIP: f64 = 0.2;
const VF: f64 = 0.5;
const ENT: f64 = 0.01;

fn main() {
    let mut init_rng = rng::stream(42, rng::STREAM_PARAM_INIT);
    let mut model = ActorCritic::new(3, 2, 4, &mut init_rng);
    let mut data_rng = rng::stream(42, 7);

    // A batch at ratio 1 with the value clip inactive: logp_old is the
    // current log-prob and v_old the current prediction.
    let mut obs = Vec::new();
    let mut actions = Vec::new();
    let mut logp_old = Vec::new();
    let mut v_old = Vec::new();
    let mut targets = Vec::new();
    let mut adv = Vec::new();
    for _ in 0..M {
        let o: Vec<f64> = (0..3).map(|_| data_rng.gen_range(-1.0..1.0)).collect();
        let a: Vec<f64> = (0..2).map(|_| data_rng.gen_range(-1.0..1.0)).collect();
        let mean = model.policy_mean(&o);
        logp_old.push(gaussian::log_prob(&mean, model.log_std(), &a));
        let v = model.value_of(&o);
        v_old.push(v);
        targets.push(v + data_rng.gen_range(-1.0..1.0));
        adv.push(data_rng.gen_range(-2.0..2.0));
        obs.push(o);
        actions.push(a);
    }

    // Analytic gradient, assembled exactly the way the update loop does it.
    model.params.zero_grads();
    let log_std = model.log_std().to_vec();
    let mut logp_new = Vec::new();
    let mut v_new = Vec::new();
    let mut caches = Vec::new();
    for j in 0..M {
        let (mean, pc) = model.policy.forward(&model.params, &obs[j]);
        let (v, vc) = model.value.forward(&model.params, &obs[j]);
        logp_new.push(gaussian::log_prob(&mean, &log_std, &actions[j]));
        v_new.push(v[0]);
        caches.push((mean, pc, vc));
    }
    let pol = policy_loss_terms(&logp_new, &logp_old, &adv, CLIP).expect("finite ratios");
    let val = value_loss_terms(&v_new, &v_old, &targets, CLIP, true);
    let mut d_log_std = vec![-ENT; 2];
    for j in 0..M {
        let (mean, pc, vc) = &caches[j];
        if pol.d_logp[j] != 0.0 {
            let (d_mean_unit, d_ls_unit) = gaussian::log_prob_grad(mean, &log_std, &actions[j]);
            let d_mean: Vec<f64> = d_mean_unit.iter().map(|g| g * pol.d_logp[j]).collect();
            model.policy.backward(&mut model.params, pc, &d_mean);
            for (acc, g) in d_log_std.iter_mut().zip(d_ls_unit.iter()) {
                *acc += g * pol.d_logp[j];
            }
        }
        let dv = VF * val.d_value[j];
        if dv != 0.0 {
            model.value.backward(&mut model.params, vc, &[dv]);
        }
    }
    model.accumulate_log_std_grad(&d_log_std);
    let analytic = model.params.flat_grads();

    // Numeric gradient of the same scalar.
    let loss_at = |flat: &[f64]| -> f64 {
        let mut probe = model.clone();
        probe.params.set_flat_data(flat);
        let ls = probe.log_std().to_vec();
        let lp: Vec<f64> = (0..M)
            .map(|j| gaussian::log_prob(&probe.policy_mean(&obs[j]), &ls, &actions[j]))
            .collect();
        let vs: Vec<f64> = (0..M).map(|j| probe.value_of(&obs[j])).collect();
        let (pl, _) = policy_loss(&lp, &logp_old, &adv, CLIP).expect("finite ratios");
        pl + VF * value_loss(&vs, &v_old, &targets, CLIP, true) - ENT * gaussian::entropy(&ls)
    };
    let theta = model.params.flat_data();
    let h = 1e-5;
    let mut worst = (0usize, 0.0f64);
    for k in 0..theta.len() {
        let mut up = theta.clone();
        let mut down = theta.clone();
        up[k] += h;
        down[k] -= h;
        let numeric = (loss_at(&up) - loss_at(&down)) / (2.0 * h);
        let rel = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1.0);
        if rel > worst.1 {
            worst = (k, rel);
        }
    }

    println!("checked {} parameters against central differences", theta.len());
    println!("worst relative error {:.3e} at parameter {}", worst.1, worst.0);
    assert!(worst.1 < 1e-6, "gradient mismatch");
    println!("all gradients agree");
}
