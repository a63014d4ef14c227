//! Planar lander with one main engine and two attitude thrusters.
//!
//! This is a rigid-body point model without a contact solver. The craft
//! starts at (0, 10) with a random horizontal drift and must touch down
//! softly on the pad `|x| <= 0.5` at `y = 0`. The body "up" axis is
//! `(-sin theta, cos theta)`, so a positive angle tilts the main engine's
//! thrust toward -x. The left thruster spins the craft counter-clockwise
//! (increasing theta), the right thruster clockwise.
//!
//! Rewards use the potential
//! `phi = -100 |p| - 100 |v| - 100 |theta|`: each step pays
//! `phi_t - phi_{t-1}` minus fuel (0.3 main, 0.03 side), plus +100 for a
//! soft landing on the pad or -100 for a crash or leaving the arena.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvSpec, Episode, StepResult};
use crate::error::Result;

pub const GRAVITY: f64 = 1.625;
pub const MAIN_ACCEL: f64 = 3.0;
pub const SIDE_ANGULAR_ACCEL: f64 = 0.15;
pub const DT: f64 = 0.02;
pub const START_HEIGHT: f64 = 10.0;
/// Horizontal offset of each leg from the body centre.
pub const LEG_OFFSET: f64 = 0.5;
pub const PAD_HALF_WIDTH: f64 = 0.5;
pub const SOFT_SPEED: f64 = 0.5;
pub const SOFT_ANGLE: f64 = 0.2;
pub const ARENA_HALF_WIDTH: f64 = 10.0;
pub const ARENA_HEIGHT: f64 = 15.0;
pub const MAIN_FUEL: f64 = 0.3;
pub const SIDE_FUEL: f64 = 0.03;
pub const LANDING_BONUS: f64 = 100.0;

pub const NOOP: usize = 0;
pub const FIRE_LEFT: usize = 1;
pub const FIRE_MAIN: usize = 2;
pub const FIRE_RIGHT: usize = 3;

static SPEC: EnvSpec = EnvSpec {
    name: "lander",
    obs_dim: 8,
    feature_dim: 8,
    n_actions: 4,
    action_names: &["noop", "fire_left", "fire_main", "fire_right"],
    max_episode_steps: 1000,
    ssr: None,
};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LanderState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub theta: f64,
    pub omega: f64,
}

impl LanderState {
    pub fn potential(&self) -> f64 {
        -100.0 * self.x.hypot(self.y) - 100.0 * self.vx.hypot(self.vy) - 100.0 * self.theta.abs()
    }

    /// Heights of the left and right leg tips.
    pub fn leg_heights(&self) -> (f64, f64) {
        let s = self.theta.sin();
        (self.y - LEG_OFFSET * s, self.y + LEG_OFFSET * s)
    }

    fn observation(&self) -> Vec<f64> {
        let (l, r) = self.leg_heights();
        vec![
            self.x,
            self.y,
            self.vx,
            self.vy,
            self.theta,
            self.omega,
            f64::from(u8::from(l <= 0.0)),
            f64::from(u8::from(r <= 0.0)),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Lander {
    state: LanderState,
    potential: f64,
    last_shaping: f64,
    episode: Episode,
}

impl Default for Lander {
    fn default() -> Self {
        Self::new()
    }
}

impl Lander {
    pub fn new() -> Self {
        Self {
            state: LanderState::default(),
            potential: 0.0,
            last_shaping: 0.0,
            episode: Episode::default(),
        }
    }

    pub fn state(&self) -> LanderState {
        self.state
    }

    pub fn set_state(&mut self, state: LanderState) {
        self.state = state;
        self.potential = state.potential();
        self.last_shaping = 0.0;
        self.episode.start();
    }

    /// Potential of the current state.
    pub fn potential(&self) -> f64 {
        self.potential
    }

    /// `phi_t - phi_{t-1}` of the most recent step.
    pub fn last_shaping(&self) -> f64 {
        self.last_shaping
    }
}

impl Env for Lander {
    fn spec(&self) -> &EnvSpec {
        &SPEC
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.set_state(LanderState {
            y: START_HEIGHT,
            vx: rng.gen_range(-1.0..=1.0),
            ..LanderState::default()
        });
        self.state.observation()
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        self.episode.check(SPEC.name, action, SPEC.n_actions)?;
        let s = &mut self.state;
        let (mut ax, mut ay, mut alpha) = (0.0, -GRAVITY, 0.0);
        let mut fuel = 0.0;
        match action {
            FIRE_MAIN => {
                let (sin, cos) = s.theta.sin_cos();
                ax -= sin * MAIN_ACCEL;
                ay += cos * MAIN_ACCEL;
                fuel = MAIN_FUEL;
            }
            FIRE_LEFT => {
                alpha = SIDE_ANGULAR_ACCEL;
                fuel = SIDE_FUEL;
            }
            FIRE_RIGHT => {
                alpha = -SIDE_ANGULAR_ACCEL;
                fuel = SIDE_FUEL;
            }
            _ => {}
        }
        // semi-implicit Euler
        s.vx += ax * DT;
        s.vy += ay * DT;
        s.omega += alpha * DT;
        s.x += s.vx * DT;
        s.y += s.vy * DT;
        s.theta += s.omega * DT;

        let phi = s.potential();
        self.last_shaping = phi - self.potential;
        self.potential = phi;

        let (l, r) = s.leg_heights();
        let out_of_bounds = s.x.abs() > ARENA_HALF_WIDTH || s.y > ARENA_HEIGHT;
        let touched = l <= 0.0 || r <= 0.0;
        let mut bonus = 0.0;
        if out_of_bounds {
            bonus = -LANDING_BONUS;
        } else if touched {
            let soft = s.vx.abs() <= SOFT_SPEED && s.vy.abs() <= SOFT_SPEED && s.theta.abs() <= SOFT_ANGLE;
            if !soft {
                bonus = -LANDING_BONUS;
            } else if s.x.abs() <= PAD_HALF_WIDTH {
                bonus = LANDING_BONUS;
            }
        }
        let obs = s.observation();
        let (terminated, truncated) = self
            .episode
            .finish_step(out_of_bounds || touched, SPEC.max_episode_steps);
        Ok(StepResult {
            obs,
            reward: self.last_shaping - fuel + bonus,
            terminated,
            truncated,
        })
    }

    fn features(&self, obs: &[f64], out: &mut [f64]) {
        const SCALE: [f64; 8] = [0.2, 0.1, 0.5, 0.2, 1.0, 1.0, 1.0, 1.0];
        for ((o, x), s) in out.iter_mut().zip(obs).zip(SCALE) {
            *o = x * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_distribution() {
        let mut env = Lander::new();
        for seed in 0..1000 {
            let o = env.reset(seed);
            assert_eq!((o[0], o[1], o[3], o[4], o[5]), (0.0, 10.0, 0.0, 0.0, 0.0));
            assert!((-1.0..=1.0).contains(&o[2]));
        }
    }

    #[test]
    fn upright_main_engine_is_vertical() {
        let mut env = Lander::new();
        env.set_state(LanderState { y: 5.0, ..Default::default() });
        let r = env.step(FIRE_MAIN).unwrap();
        assert_eq!(r.obs[2], 0.0);
        assert!((r.obs[3] - (MAIN_ACCEL - GRAVITY) * DT).abs() < 1e-15);
    }

    #[test]
    fn free_fall() {
        let mut env = Lander::new();
        env.set_state(LanderState { y: 5.0, ..Default::default() });
        for k in 1..=50 {
            let r = env.step(NOOP).unwrap();
            assert!((r.obs[3] + GRAVITY * k as f64 * DT).abs() < 1e-12);
            assert_eq!(r.obs[2], 0.0);
        }
    }

    #[test]
    fn soft_landing_on_pad_pays_bonus() {
        let mut env = Lander::new();
        env.set_state(LanderState { y: 0.001, vy: -0.3, ..Default::default() });
        let r = env.step(NOOP).unwrap();
        assert!(r.terminated);
        assert!((r.reward - (env.last_shaping() + 100.0)).abs() < 1e-12);
    }

    #[test]
    fn hard_landing_is_a_crash() {
        let mut env = Lander::new();
        env.set_state(LanderState { y: 0.01, vy: -3.0, ..Default::default() });
        let r = env.step(NOOP).unwrap();
        assert!(r.terminated);
        assert!((r.reward - (env.last_shaping() - 100.0)).abs() < 1e-12);
        assert!(env.step(NOOP).is_err());
    }

    #[test]
    fn leaving_the_arena_terminates() {
        let mut env = Lander::new();
        env.set_state(LanderState { x: 9.99, y: 5.0, vx: 2.0, ..Default::default() });
        let r = env.step(NOOP).unwrap();
        assert!(r.terminated);
        assert!(r.reward < -99.0);
    }

    #[test]
    fn fuel_costs() {
        let mut env = Lander::new();
        env.set_state(LanderState { y: 5.0, ..Default::default() });
        let r = env.step(FIRE_LEFT).unwrap();
        assert!((r.reward - (env.last_shaping() - SIDE_FUEL)).abs() < 1e-12);
        let r = env.step(FIRE_MAIN).unwrap();
        assert!((r.reward - (env.last_shaping() - MAIN_FUEL)).abs() < 1e-12);
    }
}
