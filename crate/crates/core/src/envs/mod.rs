//! Native, seedable control environments selected by name.
//!
//! Every environment implements [`Env`] and is registered in
//! [`EnvRegistry::builtin`] under its CLI name. Observations are returned raw
//! (what the intuition encoders see); [`Env::features`] maps them to the
//! network input.

pub mod cartpole;
pub mod lander;
pub mod mountaincar;
pub mod taxi;

pub use cartpole::CartPole;
pub use lander::{Lander, LanderState};
pub use mountaincar::MountainCar;
pub use taxi::{taxi_decode, taxi_encode, Taxi, TaxiState, TAXI_DEPOTS, TAXI_STATES};

use crate::error::{Error, Result};

/// Static description of an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: &'static str,
    /// Length of the raw observation vector.
    pub obs_dim: usize,
    /// Length of the network input produced by [`Env::features`].
    pub feature_dim: usize,
    pub n_actions: usize,
    pub action_names: &'static [&'static str],
    pub max_episode_steps: usize,
    /// Solved-state reward, if the environment has one.
    pub ssr: Option<f64>,
}

impl EnvSpec {
    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.action_names.iter().position(|a| *a == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

pub trait Env: Send {
    fn spec(&self) -> &EnvSpec;

    /// Start a new episode from the environment's initial-state distribution.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Advance one step. Stepping before `reset` or after the episode ended
    /// is a usage error.
    fn step(&mut self, action: usize) -> Result<StepResult>;

    /// Network features for a raw observation; `out.len() == feature_dim`.
    fn features(&self, obs: &[f64], out: &mut [f64]) {
        out.copy_from_slice(obs);
    }
}

/// Episode bookkeeping shared by all environments.
#[derive(Debug, Clone, Default)]
pub(crate) struct Episode {
    pub steps: usize,
    pub active: bool,
}

impl Episode {
    pub fn start(&mut self) {
        self.steps = 0;
        self.active = true;
    }

    pub fn check(&self, name: &str, action: usize, n_actions: usize) -> Result<()> {
        if !self.active {
            return Err(Error::Usage(format!("{name}: step called on a finished or unstarted episode")));
        }
        if action >= n_actions {
            return Err(Error::Usage(format!("{name}: action {action} out of range 0..{n_actions}")));
        }
        Ok(())
    }

    /// Count a step and return `(terminated, truncated)`; termination wins
    /// when both happen on the same step.
    pub fn finish_step(&mut self, terminal: bool, max_steps: usize) -> (bool, bool) {
        self.steps += 1;
        let truncated = !terminal && self.steps >= max_steps;
        if terminal || truncated {
            self.active = false;
        }
        (terminal, truncated)
    }
}

pub type EnvFactory = fn() -> Box<dyn Env>;

/// Name-keyed environment constructors.
pub struct EnvRegistry {
    entries: Vec<(&'static str, EnvFactory)>,
}

impl EnvRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("cartpole", || Box::new(CartPole::new()));
        r.register("mountaincar", || Box::new(MountainCar::new()));
        r.register("lander", || Box::new(Lander::new()));
        r.register("taxi", || Box::new(Taxi::new()));
        r
    }

    /// Add or replace an entry.
    pub fn register(&mut self, name: &'static str, factory: EnvFactory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn make(&self, name: &str) -> Result<Box<dyn Env>> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, f)| f())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown environment `{name}`; valid names: {}",
                    self.names().join(", ")
                ))
            })
    }
}

/// Construct a built-in environment by name.
pub fn make_env(name: &str) -> Result<Box<dyn Env>> {
    EnvRegistry::builtin().make(name)
}

/// Spec of a built-in environment.
pub fn env_spec(name: &str) -> Result<EnvSpec> {
    Ok(make_env(name)?.spec().clone())
}

/// Names of the built-in environments.
pub fn env_names() -> Vec<&'static str> {
    EnvRegistry::builtin().names()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_resolves_builtins() {
        for name in ["cartpole", "mountaincar", "lander", "taxi"] {
            let env = make_env(name).unwrap();
            assert_eq!(env.spec().name, name);
            assert!(env.spec().n_actions >= 2);
            assert_eq!(env.spec().action_names.len(), env.spec().n_actions);
        }
    }

    #[test]
    fn unknown_name_lists_valid_ones() {
        let err = make_env("nosuch").err().unwrap();
        let msg = err.to_string();
        assert!(msg.contains("cartpole") && msg.contains("taxi"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn step_before_reset_is_usage_error() {
        for name in env_names() {
            let mut env = make_env(name).unwrap();
            assert!(matches!(env.step(0), Err(Error::Usage(_))));
        }
    }

    #[test]
    fn same_seed_same_stream() {
        for name in env_names() {
            let mut a = make_env(name).unwrap();
            let mut b = make_env(name).unwrap();
            assert_eq!(a.reset(17), b.reset(17));
            let n = a.spec().n_actions;
            for t in 0..300 {
                let act = (t * 7 + 3) % n;
                let ra = a.step(act).unwrap();
                let rb = b.step(act).unwrap();
                assert_eq!(ra, rb);
                if ra.done() {
                    break;
                }
            }
        }
    }
}
