//! 5x5 taxi grid world with four depots.
//!
//! The observation is a single integer
//! `((row * 5 + col) * 5 + passenger) * 4 + destination`, where
//! `passenger == 4` means the passenger is in the taxi. The network sees it
//! one-hot encoded.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Env, EnvSpec, Episode, StepResult};
use crate::error::{Error, Result};

pub const TAXI_STATES: usize = 500;
/// R, G, Y, B as (row, col).
pub const TAXI_DEPOTS: [(usize, usize); 4] = [(0, 0), (0, 4), (4, 0), (4, 3)];
pub const IN_TAXI: usize = 4;

pub const SOUTH: usize = 0;
pub const NORTH: usize = 1;
pub const EAST: usize = 2;
pub const WEST: usize = 3;
pub const PICKUP: usize = 4;
pub const DROPOFF: usize = 5;

const MAP: [&str; 7] = [
    "+---------+",
    "|R: | : :G|",
    "| : | : : |",
    "| : : : : |",
    "| | : | : |",
    "|Y| : |B: |",
    "+---------+",
];

static SPEC: EnvSpec = EnvSpec {
    name: "taxi",
    obs_dim: 1,
    feature_dim: TAXI_STATES,
    n_actions: 6,
    action_names: &["south", "north", "east", "west", "pickup", "dropoff"],
    max_episode_steps: 200,
    ssr: None,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TaxiState {
    pub row: usize,
    pub col: usize,
    /// Depot index 0..4, or [`IN_TAXI`].
    pub passenger: usize,
    pub destination: usize,
}

pub fn taxi_encode(row: usize, col: usize, passenger: usize, destination: usize) -> Result<usize> {
    if row > 4 || col > 4 || passenger > 4 || destination > 3 {
        return Err(Error::Usage(format!(
            "taxi state out of range: row={row} col={col} passenger={passenger} destination={destination}"
        )));
    }
    Ok(((row * 5 + col) * 5 + passenger) * 4 + destination)
}

pub fn taxi_decode(code: usize) -> Result<TaxiState> {
    if code >= TAXI_STATES {
        return Err(Error::Usage(format!("taxi code {code} out of range 0..{TAXI_STATES}")));
    }
    Ok(TaxiState {
        destination: code % 4,
        passenger: (code / 4) % 5,
        col: (code / 20) % 5,
        row: code / 100,
    })
}

impl TaxiState {
    pub fn encode(&self) -> usize {
        ((self.row * 5 + self.col) * 5 + self.passenger) * 4 + self.destination
    }
}

fn can_move_east(row: usize, col: usize) -> bool {
    col < 4 && MAP[row + 1].as_bytes()[2 * col + 2] == b':'
}

fn can_move_west(row: usize, col: usize) -> bool {
    col > 0 && MAP[row + 1].as_bytes()[2 * col] == b':'
}

#[derive(Debug, Clone)]
pub struct Taxi {
    state: TaxiState,
    episode: Episode,
}

impl Default for Taxi {
    fn default() -> Self {
        Self::new()
    }
}

impl Taxi {
    pub fn new() -> Self {
        Self {
            state: TaxiState {
                row: 0,
                col: 0,
                passenger: 0,
                destination: 1,
            },
            episode: Episode::default(),
        }
    }

    pub fn state(&self) -> TaxiState {
        self.state
    }

    pub fn set_state(&mut self, state: TaxiState) {
        self.state = state;
        self.episode.start();
    }
}

impl Env for Taxi {
    fn spec(&self) -> &EnvSpec {
        &SPEC
    }

    /// Uniform over the 300 states with the passenger waiting at a depot
    /// other than the destination.
    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let passenger = rng.gen_range(0..4);
        let mut destination = rng.gen_range(0..3);
        if destination >= passenger {
            destination += 1;
        }
        self.state = TaxiState {
            row: rng.gen_range(0..5),
            col: rng.gen_range(0..5),
            passenger,
            destination,
        };
        self.episode.start();
        vec![self.state.encode() as f64]
    }

    fn step(&mut self, action: usize) -> Result<StepResult> {
        self.episode.check(SPEC.name, action, SPEC.n_actions)?;
        let s = &mut self.state;
        let here = (s.row, s.col);
        let mut reward = -1.0;
        let mut delivered = false;
        match action {
            SOUTH => s.row = (s.row + 1).min(4),
            NORTH => s.row = s.row.saturating_sub(1),
            EAST if can_move_east(s.row, s.col) => s.col += 1,
            WEST if can_move_west(s.row, s.col) => s.col -= 1,
            EAST | WEST => {}
            PICKUP => {
                if s.passenger < IN_TAXI && TAXI_DEPOTS[s.passenger] == here {
                    s.passenger = IN_TAXI;
                } else {
                    reward = -10.0;
                }
            }
            _ => {
                if s.passenger == IN_TAXI && TAXI_DEPOTS[s.destination] == here {
                    s.passenger = s.destination;
                    delivered = true;
                    reward = 20.0;
                } else if let Some(depot) = TAXI_DEPOTS.iter().position(|d| *d == here).filter(|_| s.passenger == IN_TAXI) {
                    // dropped at the wrong depot: passenger waits there
                    s.passenger = depot;
                } else {
                    reward = -10.0;
                }
            }
        }
        let code = s.encode();
        let (terminated, truncated) = self.episode.finish_step(delivered, SPEC.max_episode_steps);
        Ok(StepResult {
            obs: vec![code as f64],
            reward,
            terminated,
            truncated,
        })
    }

    fn features(&self, obs: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[obs[0] as usize] = 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codec_examples() {
        assert_eq!(taxi_encode(0, 0, 0, 0).unwrap(), 0);
        assert_eq!(taxi_encode(3, 1, 2, 0).unwrap(), 328);
        assert!(matches!(taxi_encode(5, 0, 0, 0), Err(Error::Usage(_))));
        assert!(matches!(taxi_encode(0, 0, 0, 4), Err(Error::Usage(_))));
        assert!(matches!(taxi_decode(500), Err(Error::Usage(_))));
    }

    #[test]
    fn codec_is_a_bijection() {
        let mut seen = vec![false; TAXI_STATES];
        for code in 0..TAXI_STATES {
            let s = taxi_decode(code).unwrap();
            assert_eq!(taxi_encode(s.row, s.col, s.passenger, s.destination).unwrap(), code);
            seen[code] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }

    #[test]
    fn walls_match_map() {
        assert!(!can_move_east(0, 1));
        assert!(can_move_east(0, 0));
        assert!(!can_move_east(3, 0));
        assert!(!can_move_east(4, 2));
        assert!(can_move_east(2, 3));
        assert!(!can_move_west(0, 2));
        assert!(!can_move_east(0, 4));
        assert!(!can_move_west(2, 0));
    }

    #[test]
    fn reset_never_starts_delivered() {
        let mut env = Taxi::new();
        for seed in 0..2000 {
            let code = env.reset(seed)[0] as usize;
            let s = taxi_decode(code).unwrap();
            assert!(s.passenger < 4 && s.passenger != s.destination);
        }
    }

    #[test]
    fn pickup_and_dropoff_rules() {
        let mut env = Taxi::new();
        env.set_state(TaxiState { row: 0, col: 0, passenger: 0, destination: 3 });
        let r = env.step(PICKUP).unwrap();
        assert_eq!(r.reward, -1.0);
        assert_eq!(env.state().passenger, IN_TAXI);

        env.set_state(TaxiState { row: 2, col: 2, passenger: 1, destination: 0 });
        let r = env.step(PICKUP).unwrap();
        assert_eq!(r.reward, -10.0);
        assert_eq!(r.obs[0] as usize, taxi_encode(2, 2, 1, 0).unwrap());

        env.set_state(TaxiState { row: 4, col: 3, passenger: IN_TAXI, destination: 3 });
        let r = env.step(DROPOFF).unwrap();
        assert_eq!(r.reward, 20.0);
        assert!(r.terminated);

        env.set_state(TaxiState { row: 2, col: 2, passenger: IN_TAXI, destination: 3 });
        let r = env.step(DROPOFF).unwrap();
        assert_eq!(r.reward, -10.0);
        assert!(!r.done());
    }

    #[test]
    fn blocked_move_costs_a_step() {
        let mut env = Taxi::new();
        env.set_state(TaxiState { row: 0, col: 1, passenger: 0, destination: 1 });
        let r = env.step(EAST).unwrap();
        assert_eq!(r.reward, -1.0);
        assert_eq!(env.state().col, 1);
    }
}
