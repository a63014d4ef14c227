//! On-policy PPO with an optional intuition hinge term.

mod rollout;
mod train;
mod update;

use serde::{Deserialize, Serialize};

pub use rollout::{collect_rollout, compute_gae, Collector, EpisodeStats, RolloutBuffer};
pub use train::{
    initial_params, train, train_with_observer, CurveRow, NetInfo, RunReport, TrainOptions, TrainOutcome,
    write_curve_csv,
};
pub use update::{minibatch_loss, normalize_advantages, ppo_update, LossBreakdown, Minibatch, UpdateMetrics};

use crate::error::{Error, Result};
use crate::intuition::TargetMode;
use crate::nn::{AdamConfig, DEFAULT_HIDDEN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub lr: f64,
    pub n_steps: usize,
    pub minibatch_size: usize,
    pub n_epochs: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub intuition_enabled: bool,
    pub intuition_coef: f64,
    pub target_mode: TargetMode,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub adam: AdamConfig,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            lr: 3e-4,
            n_steps: 2048,
            minibatch_size: 64,
            n_epochs: 10,
            entropy_coef: 0.0,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            intuition_enabled: false,
            intuition_coef: 0.5,
            target_mode: TargetMode::Map,
            seed: 0,
            hidden: DEFAULT_HIDDEN.to_vec(),
            adam: AdamConfig::default(),
        }
    }
}

impl PpoConfig {
    /// Shipped defaults for `env`, intuition off.
    pub fn for_env(env: &str) -> Self {
        Self {
            intuition_coef: default_intuition_coef(env),
            entropy_coef: default_entropy_coef(env),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if !(self.clip_eps > 0.0) || !(self.lr > 0.0) || !(self.max_grad_norm > 0.0) {
            return bad("clip_eps, lr and max_grad_norm must be positive");
        }
        if self.n_steps == 0 || self.minibatch_size == 0 || self.n_epochs == 0 {
            return bad("n_steps, minibatch_size and n_epochs must be positive");
        }
        if self.n_steps % self.minibatch_size != 0 {
            return bad("minibatch_size must divide n_steps");
        }
        if !(self.entropy_coef >= 0.0) || !(self.value_coef >= 0.0) || !(self.intuition_coef >= 0.0) {
            return bad("loss coefficients must be non-negative");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        Ok(())
    }
}

/// Default weight of the intuition term for `env`.
pub fn default_intuition_coef(env: &str) -> f64 {
    match env {
        "lander" => 0.01,
        _ => 0.03,
    }
}

/// Default entropy bonus for `env`. Taxi needs one: without it PPO learns to
/// avoid the illegal pickup/dropoff penalty long before it ever delivers.
pub fn default_entropy_coef(env: &str) -> f64 {
    match env {
        "taxi" => 0.01,
        _ => 0.0,
    }
}

/// Default training budget in environment steps for `env`.
pub fn default_budget(env: &str) -> usize {
    match env {
        "cartpole" => 200_000,
        "mountaincar" => 600_000,
        "lander" => 400_000,
        "taxi" => 1_500_000,
        _ => 200_000,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for env in crate::envs::env_names() {
            PpoConfig::for_env(env).validate().unwrap();
        }
        assert_eq!(PpoConfig::for_env("mountaincar").intuition_coef, 0.03);
        assert_eq!(PpoConfig::for_env("lander").intuition_coef, 0.01);
        assert_eq!(PpoConfig::for_env("taxi").entropy_coef, 0.01);
        assert_eq!(PpoConfig::for_env("cartpole").entropy_coef, 0.0);
    }

    #[test]
    fn minibatch_must_divide() {
        let c = PpoConfig {
            minibatch_size: 100,
            ..PpoConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = PpoConfig {
            gamma: 0.0,
            ..PpoConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
