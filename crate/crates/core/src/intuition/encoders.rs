//! Abstract state encoders: raw observations to parent-node states.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use super::net::{AbstractAssignment, IntuitionNet};
use crate::envs::taxi::{taxi_decode, IN_TAXI, TAXI_DEPOTS};
use crate::error::{Error, Result};

/// Speeds at or below this are treated as zero.
pub const REST_EPS: f64 = 1e-12;

/// One node produced by an encoder, with the labels it can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeSchema {
    pub node: &'static str,
    pub states: &'static [&'static str],
}

pub trait StateEncoder: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn env(&self) -> &'static str;

    fn schema(&self) -> &'static [NodeSchema];

    /// Write one state index per schema node into `out`.
    fn encode_into(&self, obs: &[f64], out: &mut [usize]) -> Result<()>;

    fn encode(&self, obs: &[f64]) -> Result<AbstractAssignment> {
        let schema = self.schema();
        let mut idx = vec![0; schema.len()];
        self.encode_into(obs, &mut idx)?;
        Ok(AbstractAssignment::from_pairs(
            schema.iter().zip(idx).map(|(n, s)| (n.node, n.states[s])),
        ))
    }
}

fn check_len(name: &str, obs: &[f64], want: usize) -> Result<()> {
    if obs.len() != want {
        return Err(Error::Usage(format!(
            "{name} encoder expects {want} observation values, got {}",
            obs.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CartPoleEncoder;

impl StateEncoder for CartPoleEncoder {
    fn name(&self) -> &'static str {
        "cartpole"
    }

    fn env(&self) -> &'static str {
        "cartpole"
    }

    fn schema(&self) -> &'static [NodeSchema] {
        &[NodeSchema { node: "lean", states: &["left", "right"] }]
    }

    fn encode_into(&self, obs: &[f64], out: &mut [usize]) -> Result<()> {
        check_len("cartpole", obs, 4)?;
        out[0] = usize::from(obs[2] > 0.0);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MountainCarEncoder;

impl StateEncoder for MountainCarEncoder {
    fn name(&self) -> &'static str {
        "mountaincar"
    }

    fn env(&self) -> &'static str {
        "mountaincar"
    }

    fn schema(&self) -> &'static [NodeSchema] {
        &[NodeSchema { node: "vel_dir", states: &["positive", "negative", "rest"] }]
    }

    fn encode_into(&self, obs: &[f64], out: &mut [usize]) -> Result<()> {
        check_len("mountaincar", obs, 2)?;
        let v = obs[1];
        out[0] = if v.abs() <= REST_EPS {
            2
        } else if v > 0.0 {
            0
        } else {
            1
        };
        Ok(())
    }
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a % (2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    } else if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

/// Quadrant index (0..4 for q1..q4) of an angle: q1 = [0, pi/2),
/// q2 = [pi/2, pi], q3 = (-pi, -pi/2), q4 = [-pi/2, 0).
pub fn quadrant(angle: f64) -> usize {
    let a = wrap_angle(angle);
    if a >= 0.0 {
        if a < FRAC_PI_2 {
            0
        } else {
            1
        }
    } else if a < -FRAC_PI_2 {
        2
    } else {
        3
    }
}

/// Bearing from the craft to the pad at the origin.
pub fn pad_bearing(x: f64, y: f64) -> f64 {
    (-y).atan2(-x)
}

/// Signed angle from the velocity direction to the pad bearing, in (-pi, pi].
pub fn steering_error(x: f64, y: f64, vx: f64, vy: f64) -> f64 {
    wrap_angle(pad_bearing(x, y) - vy.atan2(vx))
}

const QUADRANTS: &[&str] = &["q1", "q2", "q3", "q4"];
const STEER: &[&str] = &["positive", "negative", "stationary"];

fn lander_steer(obs: &[f64]) -> usize {
    let (x, y, vx, vy) = (obs[0], obs[1], obs[2], obs[3]);
    if vx.hypot(vy) <= REST_EPS {
        2
    } else if steering_error(x, y, vx, vy) > 0.0 {
        0
    } else {
        1
    }
}

/// Lander encoder: steering direction `a` and orientation quadrant `theta`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LanderEncoder;

impl StateEncoder for LanderEncoder {
    fn name(&self) -> &'static str {
        "lander"
    }

    fn env(&self) -> &'static str {
        "lander"
    }

    fn schema(&self) -> &'static [NodeSchema] {
        &[
            NodeSchema { node: "a", states: STEER },
            NodeSchema { node: "theta", states: QUADRANTS },
        ]
    }

    fn encode_into(&self, obs: &[f64], out: &mut [usize]) -> Result<()> {
        check_len("lander", obs, 8)?;
        out[0] = lander_steer(obs);
        out[1] = quadrant(obs[4]);
        Ok(())
    }
}

/// Lander encoder that also reports the quadrant of the velocity direction.
#[derive(Debug, Clone, Copy, Default)]
pub struct LanderAntiparallelEncoder;

impl StateEncoder for LanderAntiparallelEncoder {
    fn name(&self) -> &'static str {
        "lander_antiparallel"
    }

    fn env(&self) -> &'static str {
        "lander"
    }

    fn schema(&self) -> &'static [NodeSchema] {
        &[
            NodeSchema { node: "a", states: STEER },
            NodeSchema { node: "theta", states: QUADRANTS },
            NodeSchema { node: "vtheta", states: QUADRANTS },
        ]
    }

    fn encode_into(&self, obs: &[f64], out: &mut [usize]) -> Result<()> {
        check_len("lander", obs, 8)?;
        out[0] = lander_steer(obs);
        out[1] = quadrant(obs[4]);
        out[2] = quadrant(obs[3].atan2(obs[2]));
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TaxiEncoder;

impl StateEncoder for TaxiEncoder {
    fn name(&self) -> &'static str {
        "taxi"
    }

    fn env(&self) -> &'static str {
        "taxi"
    }

    fn schema(&self) -> &'static [NodeSchema] {
        &[
            NodeSchema { node: "row_rel", states: &["above", "same", "below"] },
            NodeSchema { node: "col_rel", states: &["left", "same", "right"] },
            NodeSchema { node: "phase", states: &["fetch", "deliver"] },
        ]
    }

    fn encode_into(&self, obs: &[f64], out: &mut [usize]) -> Result<()> {
        check_len("taxi", obs, 1)?;
        let code = obs[0];
        if !(code >= 0.0 && code.fract() == 0.0) {
            return Err(Error::Usage(format!("invalid taxi observation {code}")));
        }
        let s = taxi_decode(code as usize)?;
        let (phase, target) = if s.passenger == IN_TAXI {
            (1, TAXI_DEPOTS[s.destination])
        } else {
            (0, TAXI_DEPOTS[s.passenger])
        };
        out[0] = relation(s.row, target.0);
        out[1] = relation(s.col, target.1);
        out[2] = phase;
        Ok(())
    }
}

fn relation(taxi: usize, target: usize) -> usize {
    match taxi.cmp(&target) {
        std::cmp::Ordering::Less => 0,
        std::cmp::Ordering::Equal => 1,
        std::cmp::Ordering::Greater => 2,
    }
}

/// Encoders known by name, resolved against a net's parent nodes.
#[derive(Debug, Clone)]
pub struct EncoderRegistry {
    encoders: Vec<Arc<dyn StateEncoder>>,
}

impl Default for EncoderRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl EncoderRegistry {
    pub fn empty() -> Self {
        Self { encoders: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(CartPoleEncoder));
        r.register(Arc::new(MountainCarEncoder));
        r.register(Arc::new(LanderEncoder));
        r.register(Arc::new(LanderAntiparallelEncoder));
        r.register(Arc::new(TaxiEncoder));
        r
    }

    pub fn register(&mut self, encoder: Arc<dyn StateEncoder>) {
        self.encoders.push(encoder);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn StateEncoder>> {
        self.encoders.iter().find(|e| e.name() == name).cloned()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.encoders.iter().map(|e| e.name()).collect()
    }

    /// Find the encoder for the net's environment whose nodes are exactly
    /// the net's parent nodes.
    pub fn resolve(&self, net: &IntuitionNet) -> Result<Arc<dyn StateEncoder>> {
        let mut wanted: Vec<&str> = net.abstract_nodes().map(|n| n.name.as_str()).collect();
        wanted.sort_unstable();
        self.encoders
            .iter()
            .find(|e| {
                let mut have: Vec<&str> = e.schema().iter().map(|n| n.node).collect();
                have.sort_unstable();
                e.env() == net.env() && have == wanted
            })
            .cloned()
            .ok_or_else(|| {
                Error::Config(format!(
                    "no state encoder for env `{}` produces parent nodes {:?}",
                    net.env(),
                    wanted
                ))
            })
    }
}

/// Translation from encoder output order to net parent order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Binding {
    /// For each net parent node: (schema position, encoder state -> net state).
    slots: Vec<(usize, Vec<usize>)>,
}

impl Binding {
    pub(crate) fn new(net: &IntuitionNet, encoder: &dyn StateEncoder) -> Result<Self> {
        if net.env() != encoder.env() {
            return Err(Error::Config(format!(
                "net `{}` is for env `{}` but encoder `{}` is for `{}`",
                net.name(),
                net.env(),
                encoder.name(),
                encoder.env()
            )));
        }
        let schema = encoder.schema();
        let mut slots = Vec::new();
        for node in net.abstract_nodes() {
            let pos = schema.iter().position(|s| s.node == node.name).ok_or_else(|| {
                Error::Config(format!("encoder `{}` does not produce node `{}`", encoder.name(), node.name))
            })?;
            let map = schema[pos]
                .states
                .iter()
                .map(|label| {
                    node.state_index(label).ok_or_else(|| {
                        Error::Config(format!(
                            "encoder `{}` emits `{}={label}` but the net has no such state",
                            encoder.name(),
                            node.name
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            slots.push((pos, map));
        }
        if slots.len() != schema.len() {
            return Err(Error::Config(format!(
                "encoder `{}` produces nodes the net `{}` does not declare",
                encoder.name(),
                net.name()
            )));
        }
        Ok(Self { slots })
    }

    pub(crate) fn apply(&self, encoded: &[usize], out: &mut [usize]) {
        for (o, (pos, map)) in out.iter_mut().zip(&self.slots) {
            *o = map[encoded[*pos]];
        }
    }
}
