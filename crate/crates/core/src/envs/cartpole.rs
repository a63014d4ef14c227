//! Cart-pole balancing with the classic Euler-integrated dynamics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvSpec, Episode, StepResult};
use crate::error::Result;

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const HALF_LENGTH: f64 = 0.5;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;
pub const X_THRESHOLD: f64 = 2.4;
/// 12 degrees.
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;

const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
const POLE_MASS_LENGTH: f64 = POLE_MASS * HALF_LENGTH;

static SPEC: EnvSpec = EnvSpec {
    name: "cartpole",
    obs_dim: 4,
    feature_dim: 4,
    n_actions: 2,
    action_names: &["left", "right"],
    max_episode_steps: 500,
    ssr: Some(500.0),
};

/// State is `[x, x_dot, theta, theta_dot]`; action 0 pushes left, 1 pushes right.
#[derive(Debug, Clone)]
pub struct CartPole {
    state: [f64; 4],
    episode: Episode,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl CartPole {
    pub fn new() -> Self {
        Self {
            state: [0.0; 4],
            episode: Episode::default(),
        }
    }

    pub fn state(&self) -> [f64; 4] {
        self.state
    }

    /// Place the system in an arbitrary state and start a fresh episode there.
    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
        self.episode.start();
    }
}

impl Env for CartPole {
    fn spec(&self) -> &EnvSpec {
        &SPEC
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut self.state {
            *s = rng.gen_range(-0.05..=0.05);
        }
        self.episode.start();
        self.state.to_vec()
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        self.episode.check(SPEC.name, action, SPEC.n_actions)?;
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
        let (sin, cos) = theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin) / TOTAL_MASS;
        let theta_acc =
            (GRAVITY * sin - cos * temp) / (HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
        self.state = [
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ];
        let fell = self.state[0].abs() > X_THRESHOLD || self.state[2].abs() > THETA_THRESHOLD;
        let (terminated, truncated) = self.episode.finish_step(fell, SPEC.max_episode_steps);
        Ok(StepResult {
            obs: self.state.to_vec(),
            reward: 1.0,
            terminated,
            truncated,
        })
    }
}
