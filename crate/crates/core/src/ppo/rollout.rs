//! Rollout collection and advantage estimation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::envs::Env;
use crate::error::Result;
use crate::nn::{sample_action, ActorCriticParams};

/// Fixed-size on-policy buffer. Observation rows are stored both raw (for the
/// intuition encoders) and as network features.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub obs_dim: usize,
    pub feature_dim: usize,
    pub obs: Vec<f64>,
    pub features: Vec<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub terminated: Vec<bool>,
    pub truncated: Vec<bool>,
    pub logprobs: Vec<f64>,
    pub values: Vec<f64>,
    /// Critic value of the final observation of a truncated episode, else 0.
    pub bootstrap: Vec<f64>,
    /// Critic value of the observation following the last transition.
    pub last_value: f64,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn obs_row(&self, i: usize) -> &[f64] {
        &self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub ret: f64,
    pub len: usize,
}

/// An environment plus the episode in progress, carried across rollouts.
pub struct Collector {
    env: Box<dyn Env>,
    seeds: ChaCha8Rng,
    obs: Vec<f64>,
    features: Vec<f64>,
    ep_return: f64,
    ep_len: usize,
    finished: Vec<EpisodeStats>,
}

impl Collector {
    /// `seeds` supplies one reset seed per episode.
    pub fn new(mut env: Box<dyn Env>, mut seeds: ChaCha8Rng) -> Self {
        let obs = env.reset(seeds.gen());
        let mut features = vec![0.0; env.spec().feature_dim];
        env.features(&obs, &mut features);
        Self {
            env,
            seeds,
            obs,
            features,
            ep_return: 0.0,
            ep_len: 0,
            finished: Vec::new(),
        }
    }

    pub fn env(&self) -> &dyn Env {
        self.env.as_ref()
    }

    /// Episodes completed since the last call.
    pub fn take_finished(&mut self) -> Vec<EpisodeStats> {
        std::mem::take(&mut self.finished)
    }
}

/// Run the current policy for `n_steps` transitions, resetting finished
/// episodes. Actions are sampled with `rng`.
pub fn collect_rollout(
    collector: &mut Collector,
    params: &ActorCriticParams,
    n_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<RolloutBuffer> {
    let spec = collector.env.spec().clone();
    let mut buf = RolloutBuffer {
        obs_dim: spec.obs_dim,
        feature_dim: spec.feature_dim,
        obs: Vec::with_capacity(n_steps * spec.obs_dim),
        features: Vec::with_capacity(n_steps * spec.feature_dim),
        actions: Vec::with_capacity(n_steps),
        rewards: Vec::with_capacity(n_steps),
        terminated: Vec::with_capacity(n_steps),
        truncated: Vec::with_capacity(n_steps),
        logprobs: Vec::with_capacity(n_steps),
        values: Vec::with_capacity(n_steps),
        bootstrap: Vec::with_capacity(n_steps),
        ..Default::default()
    };
    let mut next_features = vec![0.0; spec.feature_dim];
    for _ in 0..n_steps {
        let c = &mut *collector;
        let logits = params.logits(&c.features)?;
        let value = params.value(&c.features)?;
        let (action, logp) = sample_action(&logits, rng)?;
        let step = c.env.step(action)?;

        buf.obs.extend_from_slice(&c.obs);
        buf.features.extend_from_slice(&c.features);
        buf.actions.push(action);
        buf.rewards.push(step.reward);
        buf.terminated.push(step.terminated);
        buf.truncated.push(step.truncated);
        buf.logprobs.push(logp);
        buf.values.push(value);

        c.ep_return += step.reward;
        c.ep_len += 1;
        c.env.features(&step.obs, &mut next_features);
        if step.truncated && !step.terminated {
            buf.bootstrap.push(params.value(&next_features)?);
        } else {
            buf.bootstrap.push(0.0);
        }
        if step.done() {
            c.finished.push(EpisodeStats {
                ret: c.ep_return,
                len: c.ep_len,
            });
            c.ep_return = 0.0;
            c.ep_len = 0;
            c.obs = c.env.reset(c.seeds.gen());
            c.env.features(&c.obs, &mut c.features);
        } else {
            c.obs = step.obs;
            c.features.copy_from_slice(&next_features);
        }
    }
    buf.last_value = params.value(&collector.features)?;
    Ok(buf)
}

/// Generalized advantage estimation. Terminated transitions do not
/// bootstrap; truncated ones bootstrap from their stored final value. In
/// both cases the recursion does not run into the next episode.
pub fn compute_gae(buf: &RolloutBuffer, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = buf.len();
    let mut adv = vec![0.0; n];
    let mut gae = 0.0;
    for t in (0..n).rev() {
        let (next_value, carry) = if buf.terminated[t] {
            (0.0, 0.0)
        } else if buf.truncated[t] {
            (buf.bootstrap[t], 0.0)
        } else if t + 1 == n {
            (buf.last_value, 1.0)
        } else {
            (buf.values[t + 1], 1.0)
        };
        let delta = buf.rewards[t] + gamma * next_value - buf.values[t];
        gae = delta + gamma * lambda * carry * gae;
        adv[t] = gae;
    }
    let returns = adv.iter().zip(&buf.values).map(|(a, v)| a + v).collect();
    (adv, returns)
}
