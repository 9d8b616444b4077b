//! Dense networks with hand-written reverse-mode gradients.
//!
//! Everything is f64 and single-threaded. A `ParamSet` owns every trainable
//! tensor of a model (policy layers, value layers, log-std vector) together
//! with its gradient and Adam moment slots, so the optimizer and the global
//! gradient clip see one flat collection, exactly like a single optimizer
//! over a combined actor-critic module.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One trainable tensor plus its gradient and optimizer moments.
/// `rows x cols` is row-major; vectors use cols = 1.
#[derive(Debug, Clone)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub grad: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        Tensor {
            rows,
            cols,
            data: vec![0.0; n],
            grad: vec![0.0; n],
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Flat collection of every trainable tensor of a model.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    pub tensors: Vec<Tensor>,
    /// Adam step counter, shared by all tensors.
    pub adam_t: u64,
}

impl ParamSet {
    pub fn zero_grads(&mut self) {
        for t in &mut self.tensors {
            t.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn n_params(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// All parameter values, flattened in tensor order. Test support.
    pub fn flat_data(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.data.iter().copied()).collect()
    }

    /// Overwrite parameter values from a flat vector in tensor order.
    pub fn set_flat_data(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "flat length mismatch");
        let mut k = 0;
        for t in &mut self.tensors {
            let n = t.len();
            t.data.copy_from_slice(&flat[k..k + n]);
            k += n;
        }
    }

    pub fn flat_grads(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.grad.iter().copied()).collect()
    }
}

/// Layer layout of a multilayer perceptron over a `ParamSet`.
///
/// The tensors live at indices `base + 2l` (weight, out x in) and
/// `base + 2l + 1` (bias) for layer l. Hidden layers apply tanh; the final
/// layer is linear.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub dims: Vec<(usize, usize)>,
    pub base: usize,
}

/// Post-activation values kept from a forward pass, indexed by layer input:
/// `acts[0]` is the network input, `acts[l]` the tanh output feeding layer l.
#[derive(Debug, Clone)]
pub struct MlpCache {
    pub acts: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn in_dim(&self) -> usize {
        self.dims[0].1
    }

    pub fn out_dim(&self) -> usize {
        self.dims[self.dims.len() - 1].0
    }

    fn weight<'a>(&self, params: &'a ParamSet, layer: usize) -> &'a Tensor {
        &params.tensors[self.base + 2 * layer]
    }

    /// Allocate this layout's tensors on `params` with fan-in uniform weight
    /// init and zero biases. Returns the layout.
    pub fn init(
        params: &mut ParamSet,
        layer_dims: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> Mlp {
        assert!(layer_dims.len() >= 2, "need at least input and output dims");
        let base = params.tensors.len();
        let mut dims = Vec::new();
        for w in layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut weight = Tensor::zeros(fan_out, fan_in);
            for x in weight.data.iter_mut() {
                *x = rng.gen_range(-bound..bound);
            }
            params.tensors.push(weight);
            params.tensors.push(Tensor::zeros(fan_out, 1));
            dims.push((fan_out, fan_in));
        }
        Mlp { dims, base }
    }

    /// Forward pass keeping the activations needed by `backward`.
    pub fn forward(&self, params: &ParamSet, input: &[f64]) -> (Vec<f64>, MlpCache) {
        assert_eq!(input.len(), self.in_dim(), "mlp input dimension mismatch");
        let n_layers = self.dims.len();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        acts.push(input.to_vec());
        let mut out = Vec::new();
        for l in 0..n_layers {
            let w = self.weight(params, l);
            let b = &params.tensors[self.base + 2 * l + 1];
            let x = &acts[l];
            let mut z = b.data.clone();
            for (j, zj) in z.iter_mut().enumerate() {
                let row = &w.data[j * w.cols..(j + 1) * w.cols];
                let mut acc = *zj;
                for (wi, xi) in row.iter().zip(x.iter()) {
                    acc += wi * xi;
                }
                *zj = acc;
            }
            if l + 1 < n_layers {
                z.iter_mut().for_each(|v| *v = v.tanh());
                acts.push(z);
            } else {
                out = z;
            }
        }
        (out, MlpCache { acts })
    }

    /// Forward pass without a cache, for rollout-time evaluation.
    pub fn output(&self, params: &ParamSet, input: &[f64]) -> Vec<f64> {
        self.forward(params, input).0
    }

    /// Accumulate gradients for one sample given `d_out = dLoss/d(output)`.
    pub fn backward(&self, params: &mut ParamSet, cache: &MlpCache, d_out: &[f64]) {
        assert_eq!(d_out.len(), self.out_dim(), "mlp output gradient mismatch");
        let n_layers = self.dims.len();
        assert_eq!(cache.acts.len(), n_layers, "cache does not match layout");
        let mut delta = d_out.to_vec();
        for l in (0..n_layers).rev() {
            let x = cache.acts[l].clone();
            let (rows, cols) = self.dims[l];
            // dW[j,i] += delta[j] * x[i]; db[j] += delta[j]
            {
                let w_t = &mut params.tensors[self.base + 2 * l];
                for j in 0..rows {
                    let row = &mut w_t.grad[j * cols..(j + 1) * cols];
                    let dj = delta[j];
                    for (gi, xi) in row.iter_mut().zip(x.iter()) {
                        *gi += dj * xi;
                    }
                }
            }
            {
                let b_t = &mut params.tensors[self.base + 2 * l + 1];
                for (g, dj) in b_t.grad.iter_mut().zip(delta.iter()) {
                    *g += dj;
                }
            }
            if l > 0 {
                // Propagate through W and the tanh of the previous layer.
                let w_t = &params.tensors[self.base + 2 * l];
                let mut prev = vec![0.0; cols];
                for j in 0..rows {
                    let row = &w_t.data[j * cols..(j + 1) * cols];
                    let dj = delta[j];
                    for (pi, wi) in prev.iter_mut().zip(row.iter()) {
                        *pi += wi * dj;
                    }
                }
                for (pi, ai) in prev.iter_mut().zip(x.iter()) {
                    *pi *= 1.0 - ai * ai;
                }
                delta = prev;
            }
        }
    }
}

/// Gaussian policy network, value network, and shared log-std vector, all
/// backed by one `ParamSet`.
#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub params: ParamSet,
    pub policy: Mlp,
    pub value: Mlp,
    pub log_std_idx: usize,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden_dim: usize,
}

impl ActorCritic {
    /// Two tanh hidden layers per head. Tensor creation order is fixed
    /// (policy layers, log-std, value layers) so that a given seed always
    /// produces the same parameters.
    pub fn new(obs_dim: usize, act_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut params = ParamSet::default();
        let policy = Mlp::init(&mut params, &[obs_dim, hidden_dim, hidden_dim, act_dim], rng);
        let log_std_idx = params.tensors.len();
        params.tensors.push(Tensor::zeros(act_dim, 1));
        let value = Mlp::init(&mut params, &[obs_dim, hidden_dim, hidden_dim, 1], rng);
        ActorCritic {
            params,
            policy,
            value,
            log_std_idx,
            obs_dim,
            act_dim,
            hidden_dim,
        }
    }

    pub fn log_std(&self) -> &[f64] {
        &self.params.tensors[self.log_std_idx].data
    }

    pub fn policy_mean(&self, obs: &[f64]) -> Vec<f64> {
        self.policy.output(&self.params, obs)
    }

    pub fn value_of(&self, obs: &[f64]) -> f64 {
        self.value.output(&self.params, obs)[0]
    }

    pub fn accumulate_log_std_grad(&mut self, d_log_std: &[f64]) {
        let t = &mut self.params.tensors[self.log_std_idx];
        assert_eq!(d_log_std.len(), t.len(), "log-std gradient mismatch");
        for (g, d) in t.grad.iter_mut().zip(d_log_std.iter()) {
            *g += d;
        }
    }
}
