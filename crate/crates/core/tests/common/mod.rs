//! Independent oracles shared by the focused test files and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use shire_core::envs::cartpole::CartPole;
use shire_core::envs::lander::{self, Lander, LanderState};
use shire_core::envs::mountaincar::MountainCar;
use shire_core::envs::taxi::{taxi_decode, taxi_encode, TAXI_STATES};
use shire_core::envs::Env;
use shire_core::intuition::{intuition_loss, AbstractAssignment, IntuitionNet, IntuitionTargets, MARGIN};
use shire_core::nn::{log_softmax, ActorCriticParams, NetShape};
use shire_core::ppo::{minibatch_loss, Minibatch, PpoConfig};

// ---- inference ----

/// Every joint assignment of `nodes`, as name -> state label maps.
pub fn all_assignments(net: &IntuitionNet, nodes: &[&str]) -> Vec<BTreeMap<String, String>> {
    let mut out = vec![BTreeMap::new()];
    for name in nodes {
        let node = net.node(name).unwrap();
        out = out
            .into_iter()
            .flat_map(|partial| {
                node.states.iter().map(move |s| {
                    let mut m = partial.clone();
                    m.insert(name.to_string(), s.clone());
                    m
                })
            })
            .collect();
    }
    out
}

fn joint(net: &IntuitionNet, full: &BTreeMap<String, String>) -> f64 {
    net.nodes()
        .iter()
        .map(|n| {
            let given: BTreeMap<String, String> = n.parents.iter().map(|p| (p.clone(), full[p].clone())).collect();
            net.cpt_entry(&n.name, &given, &full[&n.name]).unwrap()
        })
        .product()
}

/// P(children | parents) by summing the full joint and dividing by the
/// evidence marginal. Children are enumerated with the first action node
/// varying slowest.
pub fn brute_force(net: &IntuitionNet, evidence: &BTreeMap<String, String>) -> Vec<f64> {
    let children: Vec<&str> = net.action_nodes().map(|n| n.name.as_str()).collect();
    let numerators: Vec<f64> = all_assignments(net, &children)
        .into_iter()
        .map(|c| {
            let mut full = evidence.clone();
            full.extend(c);
            joint(net, &full)
        })
        .collect();
    let evidence_marginal: f64 = numerators.iter().sum();
    numerators.iter().map(|p| p / evidence_marginal).collect()
}

/// Largest absolute difference between exact inference and enumeration
/// over every parent assignment.
pub fn inference_max_error(net: &IntuitionNet) -> f64 {
    let parents: Vec<&str> = net.abstract_nodes().map(|n| n.name.as_str()).collect();
    let mut worst: f64 = 0.0;
    for evidence in all_assignments(net, &parents) {
        let post = net.infer_action_posterior(&AbstractAssignment(evidence.clone())).unwrap().probs;
        let oracle = brute_force(net, &evidence);
        assert_eq!(post.len(), oracle.len());
        worst = worst.max((post.iter().sum::<f64>() - 1.0).abs());
        for (a, b) in post.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

// ---- gradients ----

pub const FD_STEP: f64 = 1e-5;
const OBS: usize = 4;
const ACTIONS: usize = 3;
const BATCH: usize = 12;

#[derive(Debug, Clone, Copy)]
pub enum Term {
    Policy,
    Value,
    Entropy,
    Intuition,
}

pub const TERMS: [Term; 4] = [Term::Policy, Term::Value, Term::Entropy, Term::Intuition];

pub fn gradient_setup(seed: u64, term: Term) -> (ActorCriticParams, Minibatch, PpoConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ActorCriticParams::init(NetShape::new(OBS, ACTIONS, &[16, 16]).unwrap(), &mut rng);
    // the policy head starts near zero; spread the logits so rivals are distinct
    let head = params.actor_layers().last().unwrap().weight_range();
    for w in &mut params.as_mut_slice()[head] {
        *w *= 150.0;
    }
    let features: Vec<f64> = (0..BATCH * OBS).map(|_| rng.sample(StandardNormal)).collect();
    let actions: Vec<usize> = (0..BATCH).map(|_| rng.gen_range(0..ACTIONS)).collect();
    let logits = params.forward(&features, BATCH).unwrap().logits().to_vec();

    // old log-probs offset from the current ones so that every third ratio
    // is clipped; offsets stay clear of the clip boundary
    let old_logprobs = (0..BATCH)
        .map(|i| {
            let lp = log_softmax(&logits[i * ACTIONS..(i + 1) * ACTIONS])[actions[i]];
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            lp + sign * rng.gen_range(0.0f64..0.12).max(if i % 3 == 0 { 0.3 } else { 0.0 })
        })
        .collect();

    let mut config = PpoConfig {
        value_coef: 0.0,
        entropy_coef: 0.0,
        intuition_enabled: false,
        intuition_coef: 0.0,
        ..PpoConfig::default()
    };
    let mut advantages = vec![0.0; BATCH];
    let mut targets = None;
    match term {
        Term::Policy => advantages = (0..BATCH).map(|_| rng.sample(StandardNormal)).collect(),
        Term::Value => config.value_coef = 0.5,
        Term::Entropy => config.entropy_coef = 0.05,
        Term::Intuition => {
            config.intuition_enabled = true;
            config.intuition_coef = 0.7;
            targets = Some(IntuitionTargets {
                actions: (0..BATCH).map(|_| rng.gen_range(0..ACTIONS)).collect(),
                weights: (0..BATCH).map(|_| if rng.gen_bool(0.3) { 2.0 } else { 1.0 }).collect(),
            });
        }
    }
    let returns = (0..BATCH).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mb = Minibatch { features, actions, old_logprobs, advantages, returns, targets };
    (params, mb, config)
}

/// Distance to the nearest kink of the clip and the hinge at the given
/// parameters; finite differences are only meaningful away from them.
fn distance_to_kinks(params: &ActorCriticParams, mb: &Minibatch, config: &PpoConfig) -> f64 {
    let logits = params.forward(&mb.features, BATCH).unwrap().logits().to_vec();
    let mut d = f64::INFINITY;
    for i in 0..BATCH {
        let z = &logits[i * ACTIONS..(i + 1) * ACTIONS];
        let ratio = (log_softmax(z)[mb.actions[i]] - mb.old_logprobs[i]).exp();
        if mb.advantages[i] != 0.0 {
            d = d.min((ratio - (1.0 - config.clip_eps)).abs()).min((ratio - (1.0 + config.clip_eps)).abs());
        }
        if let Some(t) = &mb.targets {
            let e = t.actions[i];
            let mut rivals: Vec<f64> = (0..ACTIONS).filter(|&j| j != e).map(|j| z[j]).collect();
            rivals.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let slack = MARGIN - (z[e] - rivals[0]);
            d = d.min(slack.abs());
            if slack > 0.0 {
                // the active rival must be unique
                d = d.min(rivals[0] - rivals[1]);
            }
        }
    }
    d
}

/// Worst relative error between the analytic gradient of one loss term and
/// central differences, over all parameters with a gradient above 1e-6.
/// Smaller entries must agree to 1e-9 absolute.
pub fn gradient_worst_relative_error(seed: u64, term: Term) -> f64 {
    let (params, mb, config) = gradient_setup(seed, term);
    assert!(distance_to_kinks(&params, &mb, &config) > 1e-3, "{term:?} seed {seed}: data too close to a kink");
    let (loss, grads) = minibatch_loss(&params, &mb, &config).unwrap();
    assert!(loss.total.abs() > 0.0, "{term:?}: term is inactive");
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for k in 0..params.len() {
        let orig = params.as_slice()[k];
        probe.as_mut_slice()[k] = orig + FD_STEP;
        let up = minibatch_loss(&probe, &mb, &config).unwrap().0.total;
        probe.as_mut_slice()[k] = orig - FD_STEP;
        let down = minibatch_loss(&probe, &mb, &config).unwrap().0.total;
        probe.as_mut_slice()[k] = orig;
        let fd = (up - down) / (2.0 * FD_STEP);
        let scale = fd.abs().max(grads[k].abs());
        if scale > 1e-6 {
            compared += 1;
            worst = worst.max((fd - grads[k]).abs() / scale);
        } else if (fd - grads[k]).abs() > 1e-9 {
            worst = f64::INFINITY;
        }
    }
    assert!(compared > 0, "{term:?}: no gradient entries compared");
    worst
}

// ---- hinge ----

/// Number of random (m, s) pairs where the two-action hinge differs from
/// `max(0, 1 - m s)`. Logits are (0, s), so the score of action 1 over
/// action 0 is exactly s, and m = +1 when the intuitive action is 1.
pub fn binary_reduction_mismatches(pairs: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..pairs)
        .filter(|_| {
            let s: f64 = rng.gen_range(-5.0..5.0);
            let m: f64 = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let target = IntuitionTargets { actions: vec![usize::from(m > 0.0)], weights: vec![1.0] };
            intuition_loss(&[0.0, s], 2, &target, MARGIN, None) != f64::max(0.0, 1.0 - m * s)
        })
        .count()
}

// ---- environments ----

/// Largest deviation of MountainCar steps from the closed-form update.
pub fn mountaincar_max_error(samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = MountainCar::new();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let p0: f64 = rng.gen_range(-1.2..=0.49);
        let v0: f64 = rng.gen_range(-0.07..=0.07);
        let a = rng.gen_range(0..3usize);
        env.set_state([p0, v0]);
        let step = env.step(a).unwrap();

        let force = [-0.001, 0.0, 0.001][a];
        let mut v = v0 + force - 0.0025 * (3.0 * p0).cos();
        v = v.max(-0.07).min(0.07);
        let p = (p0 + v).max(-1.2).min(0.6);
        if p <= -1.2 && v < 0.0 {
            v = 0.0;
        }
        worst = worst.max((step.obs[0] - p).abs()).max((step.obs[1] - v).abs());
        if step.reward != -1.0 || step.terminated != (p >= 0.5) {
            return f64::INFINITY;
        }
    }
    worst
}

/// Whether the 500 taxi codes decode to distinct in-range states and
/// re-encode to themselves.
pub fn taxi_bijection_holds() -> bool {
    let mut seen = vec![false; TAXI_STATES];
    for row in 0..5 {
        for col in 0..5 {
            for passenger in 0..5 {
                for destination in 0..4 {
                    let code = taxi_encode(row, col, passenger, destination).unwrap();
                    if code >= TAXI_STATES || seen[code] {
                        return false;
                    }
                    seen[code] = true;
                    let s = taxi_decode(code).unwrap();
                    if (s.row, s.col, s.passenger, s.destination) != (row, col, passenger, destination) {
                        return false;
                    }
                }
            }
        }
    }
    seen.iter().all(|&b| b) && taxi_decode(TAXI_STATES).is_err()
}

/// Largest asymmetry between CartPole trajectories and their mirror images
/// (state negated, push direction swapped).
pub fn cartpole_mirror_max_error(starts: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..starts {
        let s: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-0.2..0.2));
        let mut env = CartPole::new();
        let mut mirror = CartPole::new();
        env.set_state(s);
        mirror.set_state(s.map(|x| -x));
        for _ in 0..5 {
            let a = rng.gen_range(0..2usize);
            let r1 = env.step(a).unwrap();
            let r2 = mirror.step(1 - a).unwrap();
            for (x, y) in r1.obs.iter().zip(&r2.obs) {
                worst = worst.max((x + y).abs());
            }
            if r1.reward != r2.reward || r1.terminated != r2.terminated {
                return f64::INFINITY;
            }
            if r1.terminated {
                break;
            }
        }
    }
    worst
}

pub fn mirror_lander_state(s: LanderState) -> LanderState {
    LanderState { x: -s.x, vx: -s.vx, theta: -s.theta, omega: -s.omega, ..s }
}

pub fn mirror_lander_action(a: usize) -> usize {
    match a {
        lander::FIRE_LEFT => lander::FIRE_RIGHT,
        lander::FIRE_RIGHT => lander::FIRE_LEFT,
        other => other,
    }
}

/// Largest asymmetry between lander trajectories and their mirror images
/// (x, vx, theta, omega negated; side engines swapped).
pub fn lander_mirror_max_error(starts: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..starts {
        let s = LanderState {
            x: rng.gen_range(-5.0..5.0),
            y: rng.gen_range(0.5..12.0),
            vx: rng.gen_range(-2.0..2.0),
            vy: rng.gen_range(-2.0..2.0),
            theta: rng.gen_range(-1.0..1.0),
            omega: rng.gen_range(-0.5..0.5),
        };
        let mut env = Lander::new();
        let mut mirror = Lander::new();
        env.set_state(s);
        mirror.set_state(mirror_lander_state(s));
        for _ in 0..10 {
            let a = rng.gen_range(0..4usize);
            let r1 = env.step(a).unwrap();
            let r2 = mirror.step(mirror_lander_action(a)).unwrap();
            let m = mirror_lander_state(env.state());
            let t = mirror.state();
            for (x, y) in [(m.x, t.x), (m.y, t.y), (m.vx, t.vx), (m.vy, t.vy), (m.theta, t.theta), (m.omega, t.omega)] {
                worst = worst.max((x - y).abs());
            }
            worst = worst.max((r1.reward - r2.reward).abs());
            // contact flags swap sides
            if (r1.obs[6], r1.obs[7]) != (r2.obs[7], r2.obs[6]) || r1.terminated != r2.terminated {
                return f64::INFINITY;
            }
            if r1.done() {
                break;
            }
        }
    }
    worst
}

/// Over random-action episodes: the largest gap between summed shaping and
/// the potential difference, and between each reward and its shaping minus
/// fuel plus a terminal bonus in {0, +100, -100}.
pub fn lander_telescoping_max_error(episodes: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for ep in 0..episodes {
        let mut env = Lander::new();
        env.reset(ep);
        let phi0 = env.potential();
        let mut shaping = 0.0;
        loop {
            let a = rng.gen_range(0..4usize);
            let r = env.step(a).unwrap();
            shaping += env.last_shaping();
            let fuel = match a {
                lander::FIRE_MAIN => lander::MAIN_FUEL,
                lander::FIRE_LEFT | lander::FIRE_RIGHT => lander::SIDE_FUEL,
                _ => 0.0,
            };
            let rest = r.reward - env.last_shaping() + fuel;
            let bonuses: &[f64] = if r.terminated { &[0.0, 100.0, -100.0] } else { &[0.0] };
            worst = worst.max(bonuses.iter().map(|b| (rest - b).abs()).fold(f64::INFINITY, f64::min));
            if r.done() {
                break;
            }
        }
        worst = worst.max((shaping - (env.potential() - phi0)).abs());
        let st = env.state();
        let phi = -100.0 * st.x.hypot(st.y) - 100.0 * st.vx.hypot(st.vy) - 100.0 * st.theta.abs();
        worst = worst.max((env.potential() - phi).abs());
    }
    worst
}
