//! Under-powered car in a valley.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvSpec, Episode, StepResult};
use crate::error::Result;

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const GOAL_POSITION: f64 = 0.5;
pub const FORCE: f64 = 0.001;
pub const GRAVITY: f64 = 0.0025;

static SPEC: EnvSpec = EnvSpec {
    name: "mountaincar",
    obs_dim: 2,
    feature_dim: 2,
    n_actions: 3,
    action_names: &["push_left", "no_push", "push_right"],
    max_episode_steps: 200,
    ssr: Some(-110.0),
};

/// State is `[position, velocity]`.
#[derive(Debug, Clone)]
pub struct MountainCar {
    state: [f64; 2],
    episode: Episode,
}

impl Default for MountainCar {
    fn default() -> Self {
        Self::new()
    }
}

impl MountainCar {
    pub fn new() -> Self {
        Self {
            state: [0.0; 2],
            episode: Episode::default(),
        }
    }

    pub fn state(&self) -> [f64; 2] {
        self.state
    }

    pub fn set_state(&mut self, state: [f64; 2]) {
        self.state = state;
        self.episode.start();
    }
}

impl Env for MountainCar {
    fn spec(&self) -> &EnvSpec {
        &SPEC
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = [rng.gen_range(-0.6..=-0.4), 0.0];
        self.episode.start();
        self.state.to_vec()
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        self.episode.check(SPEC.name, action, SPEC.n_actions)?;
        let [p, v] = self.state;
        let mut v = (v + (action as f64 - 1.0) * FORCE - GRAVITY * (3.0 * p).cos()).clamp(-MAX_SPEED, MAX_SPEED);
        let p = (p + v).clamp(MIN_POSITION, MAX_POSITION);
        if p == MIN_POSITION && v < 0.0 {
            v = 0.0;
        }
        self.state = [p, v];
        let (terminated, truncated) = self.episode.finish_step(p >= GOAL_POSITION, SPEC.max_episode_steps);
        Ok(StepResult {
            obs: self.state.to_vec(),
            reward: -1.0,
            terminated,
            truncated,
        })
    }

    /// Position mapped to roughly [-1, 1]; velocity scaled by its bound.
    fn features(&self, obs: &[f64], out: &mut [f64]) {
        out[0] = (obs[0] + 0.3) / 0.9;
        out[1] = obs[1] / MAX_SPEED;
    }
}
