//! Proximal policy optimization with intuition-net auxiliary losses.

pub mod bench;
pub mod checkpoint;
pub mod error;
pub mod envs;
pub mod intuition;
pub mod nn;
pub mod ppo;

pub use error::{Error, NetError, Result};
