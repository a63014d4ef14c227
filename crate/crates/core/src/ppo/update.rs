//! Clipped-surrogate PPO update.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PpoConfig, RolloutBuffer};
use crate::error::{Error, Result};
use crate::intuition::{agreement_rate, intuition_loss, mismatch_vector, IntuitionTargets, MARGIN};
use crate::nn::{clip_global_norm, log_softmax, ActorCriticParams, AdamState, Gradients};

/// One minibatch of training data, rows aligned.
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub features: Vec<f64>,
    pub actions: Vec<usize>,
    pub old_logprobs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub targets: Option<IntuitionTargets>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Gather rows `idx` of `buf`; `advantages` replaces the buffer's own.
    pub fn gather(buf: &RolloutBuffer, advantages: &[f64], targets: Option<&IntuitionTargets>, idx: &[usize]) -> Self {
        let d = buf.feature_dim;
        let mut features = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            features.extend_from_slice(&buf.features[i * d..(i + 1) * d]);
        }
        Self {
            features,
            actions: idx.iter().map(|&i| buf.actions[i]).collect(),
            old_logprobs: idx.iter().map(|&i| buf.logprobs[i]).collect(),
            advantages: idx.iter().map(|&i| advantages[i]).collect(),
            returns: idx.iter().map(|&i| buf.returns[i]).collect(),
            targets: targets.map(|t| t.select(idx)),
        }
    }
}

/// Loss terms of one evaluation pass.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// Negated clipped surrogate.
    pub policy: f64,
    /// Mean squared error of the critic against the returns.
    pub value: f64,
    /// Mean policy entropy.
    pub entropy: f64,
    /// `policy + value_coef * value - entropy_coef * entropy`.
    pub ppo: f64,
    /// Hinge loss against the intuitive actions (0 when disabled).
    pub intuition: f64,
    /// `ppo + intuition_coef * intuition`.
    pub total: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Total loss on a minibatch and its gradient with respect to the parameters.
pub fn minibatch_loss(
    params: &ActorCriticParams,
    mb: &Minibatch,
    config: &PpoConfig,
) -> Result<(LossBreakdown, Gradients)> {
    let n = mb.len();
    let k = params.shape().n_actions;
    let fwd = params.forward(&mb.features, n)?;
    let logits = fwd.logits();
    let values = fwd.values();
    let inv_n = 1.0 / n as f64;

    let mut d_logits = vec![0.0; n * k];
    let mut d_values = vec![0.0; n];
    let mut out = LossBreakdown::default();
    let mut clipped = 0usize;

    for i in 0..n {
        let z = &logits[i * k..(i + 1) * k];
        let lp = log_softmax(z);
        let a = mb.actions[i];
        let ratio = (lp[a] - mb.old_logprobs[i]).exp();
        let adv = mb.advantages[i];
        let surr1 = ratio * adv;
        let surr2 = ratio.clamp(1.0 - config.clip_eps, 1.0 + config.clip_eps) * adv;
        out.policy -= surr1.min(surr2);
        if (ratio - 1.0).abs() > config.clip_eps {
            clipped += 1;
        }
        out.approx_kl += mb.old_logprobs[i] - lp[a];

        let entropy: f64 = -lp.iter().map(|l| l.exp() * l).sum::<f64>();
        out.entropy += entropy;

        // d(policy)/d(logp_a), then through log-softmax
        let d_logp = if surr1 <= surr2 { -adv * ratio * inv_n } else { 0.0 };
        let row = &mut d_logits[i * k..(i + 1) * k];
        for j in 0..k {
            let p = lp[j].exp();
            let mut g = -d_logp * p;
            if j == a {
                g += d_logp;
            }
            // -entropy_coef * H / n, with dH/dz_j = -p_j (log p_j + H)
            g += config.entropy_coef * inv_n * p * (lp[j] + entropy);
            row[j] = g;
        }

        let err = values[i] - mb.returns[i];
        out.value += err * err;
        d_values[i] = 2.0 * config.value_coef * err * inv_n;
    }
    out.policy *= inv_n;
    out.value *= inv_n;
    out.entropy *= inv_n;
    out.approx_kl *= inv_n;
    out.clip_fraction = clipped as f64 * inv_n;
    out.ppo = out.policy + config.value_coef * out.value - config.entropy_coef * out.entropy;

    if let Some(targets) = mb.targets.as_ref().filter(|_| config.intuition_enabled) {
        let grad = (config.intuition_coef != 0.0).then_some((d_logits.as_mut_slice(), config.intuition_coef));
        out.intuition = intuition_loss(logits, k, targets, MARGIN, grad);
    }
    out.total = out.ppo + config.intuition_coef * out.intuition;
    if !out.total.is_finite() {
        return Err(Error::Numerical(format!("non-finite loss {out:?}")));
    }
    let grads = params.backward(&fwd, &d_logits, &d_values)?;
    Ok((out, grads))
}

/// Normalize to zero mean and unit (population) standard deviation.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    adv.iter_mut().for_each(|a| *a = (*a - mean) / (std + 1e-8));
}

/// Averages over the minibatches of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateMetrics {
    pub loss: LossBreakdown,
    /// Fraction of buffer actions that match the intuitive action.
    pub agreement_rate: Option<f64>,
    /// Mean global gradient norm before clipping.
    pub grad_norm: f64,
    pub minibatches: usize,
}

/// `n_epochs` passes of shuffled minibatch Adam steps over `buf`, whose
/// `advantages` and `returns` must be filled in.
pub fn ppo_update(
    params: &mut ActorCriticParams,
    adam: &mut AdamState,
    buf: &RolloutBuffer,
    config: &PpoConfig,
    targets: Option<&IntuitionTargets>,
    rng: &mut ChaCha8Rng,
) -> Result<UpdateMetrics> {
    let n = buf.len();
    if n == 0 || buf.advantages.len() != n || buf.returns.len() != n {
        return Err(Error::Usage("buffer has no computed advantages".into()));
    }
    let targets = targets.filter(|_| config.intuition_enabled);
    let mut adv = buf.advantages.clone();
    normalize_advantages(&mut adv);

    let mut idx: Vec<usize> = (0..n).collect();
    let mut metrics = UpdateMetrics {
        agreement_rate: targets.map(|t| agreement_rate(&mismatch_vector(&buf.actions, t))),
        ..Default::default()
    };
    let mb_size = config.minibatch_size.min(n);
    for _ in 0..config.n_epochs {
        idx.shuffle(rng);
        for chunk in idx.chunks(mb_size) {
            let mb = Minibatch::gather(buf, &adv, targets, chunk);
            let (loss, mut grads) = minibatch_loss(params, &mb, config)?;
            metrics.grad_norm += clip_global_norm(&mut grads, config.max_grad_norm);
            adam.step(params.as_mut_slice(), &grads, config.lr);
            let l = &mut metrics.loss;
            l.policy += loss.policy;
            l.value += loss.value;
            l.entropy += loss.entropy;
            l.ppo += loss.ppo;
            l.intuition += loss.intuition;
            l.total += loss.total;
            l.clip_fraction += loss.clip_fraction;
            l.approx_kl += loss.approx_kl;
            metrics.minibatches += 1;
        }
    }
    if !params.is_finite() {
        return Err(Error::Numerical("parameters became non-finite".into()));
    }
    let m = metrics.minibatches as f64;
    let l = &mut metrics.loss;
    for v in [
        &mut l.policy,
        &mut l.value,
        &mut l.entropy,
        &mut l.ppo,
        &mut l.intuition,
        &mut l.total,
        &mut l.clip_fraction,
        &mut l.approx_kl,
    ] {
        *v /= m;
    }
    metrics.grad_norm /= m;
    Ok(metrics)
}
