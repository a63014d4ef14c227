//! Dense actor-critic network with hand-written reverse-mode gradients.
//!
//! The actor and critic are separate tanh MLPs over the same input features.
//! All parameters live in one flat `Vec<f64>`; each dense layer is a view
//! into it (weights stored `fan_in x fan_out`, row-major, followed by the
//! bias). Keeping a single buffer makes the optimizer, gradient clipping,
//! checkpointing and finite-difference checks operate on plain slices.

mod adam;
mod policy;

pub use adam::{AdamConfig, AdamState};
pub use policy::{argmax, log_softmax, logprob_entropy, sample_action, softmax};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Hidden width used by the shipped agents.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
const ACTOR_HEAD_GAIN: f64 = 0.01;
const CRITIC_HEAD_GAIN: f64 = 1.0;

/// Input/output sizes of an actor-critic network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetShape {
    pub obs_dim: usize,
    pub n_actions: usize,
    pub hidden: Vec<usize>,
}

impl NetShape {
    pub fn new(obs_dim: usize, n_actions: usize, hidden: &[usize]) -> Result<Self> {
        if obs_dim == 0 || n_actions == 0 || hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config(format!(
                "degenerate network shape: obs_dim={obs_dim}, n_actions={n_actions}, hidden={hidden:?}"
            )));
        }
        Ok(Self {
            obs_dim,
            n_actions,
            hidden: hidden.to_vec(),
        })
    }

    fn trunk_sizes(&self, out: usize) -> Vec<usize> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(self.obs_dim);
        sizes.extend_from_slice(&self.hidden);
        sizes.push(out);
        sizes
    }
}

/// Position of one dense layer inside the flat parameter buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub fan_in: usize,
    pub fan_out: usize,
    pub offset: usize,
}

impl Dense {
    pub fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.fan_in * self.fan_out
    }

    pub fn bias_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.fan_in * self.fan_out;
        start..start + self.fan_out
    }

    fn len(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }
}

fn build_trunk(sizes: &[usize], offset: &mut usize) -> Vec<Dense> {
    sizes
        .windows(2)
        .map(|w| {
            let layer = Dense {
                fan_in: w[0],
                fan_out: w[1],
                offset: *offset,
            };
            *offset += layer.len();
            layer
        })
        .collect()
}

/// Trainable policy and value network.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorCriticParams {
    shape: NetShape,
    actor: Vec<Dense>,
    critic: Vec<Dense>,
    data: Vec<f64>,
}

/// Flat gradient buffer, laid out exactly like [`ActorCriticParams::as_slice`].
pub type Gradients = Vec<f64>;

impl ActorCriticParams {
    /// All-zero parameters; the resulting policy is uniform and the value is 0.
    pub fn zeros(shape: NetShape) -> Self {
        let mut offset = 0;
        let actor = build_trunk(&shape.trunk_sizes(shape.n_actions), &mut offset);
        let critic = build_trunk(&shape.trunk_sizes(1), &mut offset);
        Self {
            shape,
            actor,
            critic,
            data: vec![0.0; offset],
        }
    }

    /// Orthogonal initialization: gain sqrt(2) on hidden layers, 0.01 on the
    /// actor head and 1.0 on the critic head; zero biases.
    pub fn init(shape: NetShape, rng: &mut ChaCha8Rng) -> Self {
        let mut params = Self::zeros(shape);
        let n_actor = params.actor.len();
        let n_critic = params.critic.len();
        let layers: Vec<(Dense, f64)> = params
            .actor
            .iter()
            .enumerate()
            .map(|(k, l)| (*l, if k + 1 == n_actor { ACTOR_HEAD_GAIN } else { HIDDEN_GAIN }))
            .chain(params.critic.iter().enumerate().map(|(k, l)| {
                (*l, if k + 1 == n_critic { CRITIC_HEAD_GAIN } else { HIDDEN_GAIN })
            }))
            .collect();
        for (layer, gain) in layers {
            let w = orthogonal(layer.fan_in, layer.fan_out, gain, rng);
            params.data[layer.weight_range()].copy_from_slice(&w);
        }
        params
    }

    /// Rebuild parameters from a shape and a flat buffer (checkpoint loading).
    pub fn from_flat(shape: NetShape, data: Vec<f64>) -> Result<Self> {
        let mut params = Self::zeros(shape);
        if data.len() != params.data.len() {
            return Err(Error::Config(format!(
                "expected {} parameters, got {}",
                params.data.len(),
                data.len()
            )));
        }
        params.data = data;
        Ok(params)
    }

    pub fn shape(&self) -> &NetShape {
        &self.shape
    }

    pub fn actor_layers(&self) -> &[Dense] {
        &self.actor
    }

    pub fn critic_layers(&self) -> &[Dense] {
        &self.critic
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Batched forward pass over `n` rows of `obs` (row-major, `n x obs_dim`).
    pub fn forward(&self, obs: &[f64], n: usize) -> Result<Forward> {
        if n == 0 || obs.len() != n * self.shape.obs_dim {
            return Err(Error::Config(format!(
                "observation batch of length {} does not match n={} x obs_dim={}",
                obs.len(),
                n,
                self.shape.obs_dim
            )));
        }
        let actor = run_trunk(&self.actor, &self.data, obs, n);
        let critic = run_trunk(&self.critic, &self.data, obs, n);
        Ok(Forward {
            n,
            input: obs.to_vec(),
            actor,
            critic,
        })
    }

    /// Actor logits for a single observation, without keeping activations.
    pub fn logits(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.single(&self.actor, obs)
    }

    /// Critic value for a single observation.
    pub fn value(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.single(&self.critic, obs)?[0])
    }

    fn single(&self, trunk: &[Dense], obs: &[f64]) -> Result<Vec<f64>> {
        if obs.len() != self.shape.obs_dim {
            return Err(Error::Config(format!(
                "observation of length {} does not match obs_dim={}",
                obs.len(),
                self.shape.obs_dim
            )));
        }
        let mut x = obs.to_vec();
        for (k, layer) in trunk.iter().enumerate() {
            let mut y = vec![0.0; layer.fan_out];
            dense_forward(layer, &self.data, &x, 1, &mut y);
            if k + 1 < trunk.len() {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            x = y;
        }
        Ok(x)
    }

    /// Reverse-mode gradient of a scalar loss given its partial derivatives
    /// with respect to the logits (`n x n_actions`) and values (`n`).
    pub fn backward(&self, fwd: &Forward, d_logits: &[f64], d_values: &[f64]) -> Result<Gradients> {
        let n = fwd.n;
        if d_logits.len() != n * self.shape.n_actions || d_values.len() != n {
            return Err(Error::Config("loss derivative shapes do not match forward batch".into()));
        }
        let mut grads = vec![0.0; self.data.len()];
        trunk_backward(&self.actor, &self.data, &fwd.input, &fwd.actor, n, d_logits, &mut grads);
        trunk_backward(&self.critic, &self.data, &fwd.input, &fwd.critic, n, d_values, &mut grads);
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical("non-finite gradient".into()));
        }
        Ok(grads)
    }
}

/// Activations kept from a forward pass for use in [`ActorCriticParams::backward`].
#[derive(Debug, Clone)]
pub struct Forward {
    n: usize,
    input: Vec<f64>,
    // Per layer output; hidden layers are stored after tanh.
    actor: Vec<Vec<f64>>,
    critic: Vec<Vec<f64>>,
}

impl Forward {
    pub fn batch_size(&self) -> usize {
        self.n
    }

    /// `n x n_actions`, row-major.
    pub fn logits(&self) -> &[f64] {
        self.actor.last().expect("non-empty trunk")
    }

    pub fn values(&self) -> &[f64] {
        self.critic.last().expect("non-empty trunk")
    }
}

fn dense_forward(layer: &Dense, data: &[f64], x: &[f64], n: usize, out: &mut [f64]) {
    let (fi, fo) = (layer.fan_in, layer.fan_out);
    let w = &data[layer.weight_range()];
    let b = &data[layer.bias_range()];
    for s in 0..n {
        let y = &mut out[s * fo..(s + 1) * fo];
        y.copy_from_slice(b);
        for (i, &xi) in x[s * fi..(s + 1) * fi].iter().enumerate() {
            // one-hot inputs are mostly zero
            if xi == 0.0 {
                continue;
            }
            for (yj, wj) in y.iter_mut().zip(&w[i * fo..(i + 1) * fo]) {
                *yj += xi * wj;
            }
        }
    }
}

fn run_trunk(trunk: &[Dense], data: &[f64], obs: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut outs: Vec<Vec<f64>> = Vec::with_capacity(trunk.len());
    for (k, layer) in trunk.iter().enumerate() {
        let mut y = vec![0.0; n * layer.fan_out];
        let x = if k == 0 { obs } else { &outs[k - 1] };
        dense_forward(layer, data, x, n, &mut y);
        if k + 1 < trunk.len() {
            y.iter_mut().for_each(|v| *v = v.tanh());
        }
        outs.push(y);
    }
    outs
}

fn trunk_backward(
    trunk: &[Dense],
    data: &[f64],
    input: &[f64],
    acts: &[Vec<f64>],
    n: usize,
    d_out: &[f64],
    grads: &mut [f64],
) {
    let mut delta = d_out.to_vec();
    for k in (0..trunk.len()).rev() {
        let layer = &trunk[k];
        let (fi, fo) = (layer.fan_in, layer.fan_out);
        let x: &[f64] = if k == 0 { input } else { &acts[k - 1] };
        {
            let (gw, gb) = grads[layer.offset..layer.offset + layer.len()].split_at_mut(fi * fo);
            for s in 0..n {
                let ds = &delta[s * fo..(s + 1) * fo];
                for (g, d) in gb.iter_mut().zip(ds) {
                    *g += d;
                }
                for (i, &xi) in x[s * fi..(s + 1) * fi].iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    for (g, d) in gw[i * fo..(i + 1) * fo].iter_mut().zip(ds) {
                        *g += xi * d;
                    }
                }
            }
        }
        if k == 0 {
            break;
        }
        let w = &data[layer.weight_range()];
        let h = &acts[k - 1];
        let mut prev = vec![0.0; n * fi];
        for s in 0..n {
            let ds = &delta[s * fo..(s + 1) * fo];
            for i in 0..fi {
                let dot: f64 = w[i * fo..(i + 1) * fo].iter().zip(ds).map(|(a, b)| a * b).sum();
                let hi = h[s * fi + i];
                prev[s * fi + i] = dot * (1.0 - hi * hi);
            }
        }
        delta = prev;
    }
}

/// `fan_in x fan_out` matrix with orthonormal rows or columns (whichever set
/// is smaller), scaled by `gain`.
fn orthogonal(fan_in: usize, fan_out: usize, gain: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (k, dim) = if fan_in >= fan_out { (fan_out, fan_in) } else { (fan_in, fan_out) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for u in &basis {
            let proj: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    let mut w = vec![0.0; fan_in * fan_out];
    for (c, u) in basis.iter().enumerate() {
        for (r, &val) in u.iter().enumerate() {
            let (i, j) = if fan_in >= fan_out { (r, c) } else { (c, r) };
            w[i * fan_out + j] = gain * val;
        }
    }
    w
}

/// Euclidean norm of a flat gradient.
pub fn global_norm(grads: &[f64]) -> f64 {
    grads.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Rescale `grads` in place so its norm does not exceed `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm {
        let scale = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn small_shape() -> NetShape {
        NetShape::new(3, 2, &[5, 4]).unwrap()
    }

    #[test]
    fn zero_params_give_uniform_policy_and_zero_value() {
        let p = ActorCriticParams::zeros(small_shape());
        let f = p.forward(&[0.3, -1.0, 2.0, 5.0, 0.0, 1.0], 2).unwrap();
        assert!(f.logits().iter().all(|&z| z == 0.0));
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hand_evaluated_scalar_path() {
        // 1 -> 1 -> 1 -> 1 actor: logit = w3 * tanh(w2 * tanh(w1 * x + b1) + b2) + b3
        let shape = NetShape::new(1, 1, &[1, 1]).unwrap();
        let mut p = ActorCriticParams::zeros(shape);
        let vals = [(0.7, 0.1), (-1.3, 0.2), (2.0, -0.5)];
        for (layer, (w, b)) in p.actor.clone().iter().zip(vals) {
            p.data[layer.weight_range()][0] = w;
            p.data[layer.bias_range()][0] = b;
        }
        let x = 0.4;
        let expect = 2.0 * ((-1.3) * (0.7 * x + 0.1_f64).tanh() + 0.2).tanh() - 0.5;
        assert!((p.logits(&[x]).unwrap()[0] - expect).abs() < 1e-15);
        let f = p.forward(&[x], 1).unwrap();
        assert!((f.logits()[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn identical_rows_give_identical_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ActorCriticParams::init(small_shape(), &mut rng);
        let f = p.forward(&[0.1, 0.2, 0.3, 0.1, 0.2, 0.3], 2).unwrap();
        assert_eq!(f.logits()[..2], f.logits()[2..]);
        assert_eq!(f.values()[0], f.values()[1]);
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let p = ActorCriticParams::zeros(small_shape());
        assert!(matches!(p.forward(&[1.0, 2.0], 1), Err(Error::Config(_))));
        assert!(matches!(p.forward(&[], 0), Err(Error::Config(_))));
    }

    #[test]
    fn layer_shapes_chain() {
        let p = ActorCriticParams::zeros(NetShape::new(7, 3, &DEFAULT_HIDDEN).unwrap());
        for trunk in [p.actor_layers(), p.critic_layers()] {
            assert_eq!(trunk[0].fan_in, 7);
            for w in trunk.windows(2) {
                assert_eq!(w[0].fan_out, w[1].fan_in);
            }
        }
        assert_eq!(p.actor_layers().last().unwrap().fan_out, 3);
        assert_eq!(p.critic_layers().last().unwrap().fan_out, 1);
    }

    #[test]
    fn orthogonal_columns_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = orthogonal(6, 4, 1.0, &mut rng);
        for a in 0..4 {
            for b in 0..4 {
                let dot: f64 = (0..6).map(|i| w[i * 4 + a] * w[i * 4 + b]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn value_mse_gradient_on_single_sample() {
        // d/dw (v - R)^2 = 2 (v - R) dv/dw; check the critic head bias, where dv/db = 1.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = ActorCriticParams::init(small_shape(), &mut rng);
        let obs = [0.5, -0.2, 0.9];
        let f = p.forward(&obs, 1).unwrap();
        let target = 3.0;
        let v = f.values()[0];
        let g = p.backward(&f, &[0.0, 0.0], &[2.0 * (v - target)]).unwrap();
        let head = p.critic_layers().last().unwrap();
        assert!((g[head.bias_range()][0] - 2.0 * (v - target)).abs() < 1e-14);
        assert!(g[p.actor_layers()[0].weight_range()].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn clipping_caps_norm() {
        let mut g = vec![3.0, 4.0];
        let before = clip_global_norm(&mut g, 0.5);
        assert_eq!(before, 5.0);
        assert!(global_norm(&g) <= 0.5 + 1e-12);
        let mut small = vec![0.1, 0.1];
        clip_global_norm(&mut small, 0.5);
        assert_eq!(small, vec![0.1, 0.1]);
    }
}
