//! The training loop and its report.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{collect_rollout, compute_gae, default_budget, ppo_update, Collector, PpoConfig};
use crate::bench::evaluate_env;
use crate::envs::{env_spec, make_env};
use crate::error::{Error, Result};
use crate::intuition::Intuition;
use crate::nn::{ActorCriticParams, AdamState, NetShape};

// Independent random streams derived from the run seed.
const STREAM_INIT: u64 = 0;
const STREAM_ACTIONS: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_ENV: u64 = 3;
const STREAM_INTUITION: u64 = 4;
const STREAM_EVAL: u64 = 5;

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Initial parameters for `seed`; identical for every run with that seed.
pub fn initial_params(shape: NetShape, seed: u64) -> ActorCriticParams {
    ActorCriticParams::init(shape, &mut stream(seed, STREAM_INIT))
}

/// Budget, evaluation and stopping rules of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Environment steps to train for; only whole rollouts are collected.
    pub total_steps: usize,
    /// Greedy evaluation episodes after every rollout.
    pub eval_episodes: usize,
    /// Mean evaluation reward that counts as solved.
    pub solve_threshold: Option<f64>,
    pub stop_when_solved: bool,
}

impl TrainOptions {
    /// Default budget and the environment's solved reward, if it has one.
    pub fn for_env(env: &str) -> Self {
        Self {
            total_steps: default_budget(env),
            eval_episodes: 100,
            solve_threshold: env_spec(env).ok().and_then(|s| s.ssr),
            stop_when_solved: true,
        }
    }
}

/// One learning-curve point, recorded after each rollout's update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub step: usize,
    pub mean_eval_reward: f64,
    pub std_eval_reward: f64,
    pub loss_policy: f64,
    pub loss_value: f64,
    /// The entropy term as it enters the loss.
    pub loss_entropy: f64,
    pub loss_intuition: f64,
    pub loss_total: f64,
    pub agreement_rate: Option<f64>,
    pub wall_seconds: f64,
}

/// Identity of the intuition net used by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetInfo {
    pub name: String,
    pub source: Option<String>,
    pub sha256: Option<String>,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub env: String,
    pub seed: u64,
    pub intuition_enabled: bool,
    pub net: Option<NetInfo>,
    pub config: PpoConfig,
    pub options: TrainOptions,
    pub steps_to_solve: Option<usize>,
    pub seconds_to_solve: Option<f64>,
    pub total_steps: usize,
    pub wall_clock_seconds: f64,
    /// Mean time spent computing intuition targets per buffered sample.
    pub overhead_us_per_sample: Option<f64>,
    pub curve: Vec<CurveRow>,
    pub final_eval_mean: Option<f64>,
    pub final_eval_std: Option<f64>,
    pub episodes: usize,
}

/// Learning curve as CSV:
/// `step,mean_eval_reward,loss_policy,loss_value,loss_entropy,loss_intuition,agreement_rate`.
/// Agreement is empty for runs without intuition.
pub fn write_curve_csv<W: std::io::Write>(curve: &[CurveRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "step",
        "mean_eval_reward",
        "loss_policy",
        "loss_value",
        "loss_entropy",
        "loss_intuition",
        "agreement_rate",
    ])?;
    for r in curve {
        w.write_record([
            r.step.to_string(),
            r.mean_eval_reward.to_string(),
            r.loss_policy.to_string(),
            r.loss_value.to_string(),
            r.loss_entropy.to_string(),
            r.loss_intuition.to_string(),
            r.agreement_rate.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub struct TrainOutcome {
    pub params: ActorCriticParams,
    pub report: RunReport,
}

pub fn train(env: &str, intuition: Option<&Intuition>, config: &PpoConfig, options: &TrainOptions) -> Result<TrainOutcome> {
    train_with_observer(env, intuition, config, options, &mut |_| {})
}

/// [`train`], calling `observer` with every new curve row.
pub fn train_with_observer(
    env_name: &str,
    intuition: Option<&Intuition>,
    config: &PpoConfig,
    options: &TrainOptions,
    observer: &mut dyn FnMut(&CurveRow),
) -> Result<TrainOutcome> {
    config.validate()?;
    let intuition = if config.intuition_enabled {
        let i = intuition.ok_or_else(|| Error::Config("intuition enabled but no net given".into()))?;
        i.check_env(env_name)?;
        Some(i)
    } else {
        None
    };
    let spec = env_spec(env_name)?;
    let shape = NetShape::new(spec.feature_dim, spec.n_actions, &config.hidden)?;
    let mut params = initial_params(shape, config.seed);
    let mut adam = AdamState::new(params.len(), config.adam);

    let mut action_rng = stream(config.seed, STREAM_ACTIONS);
    let mut shuffle_rng = stream(config.seed, STREAM_SHUFFLE);
    let mut intuition_rng = stream(config.seed, STREAM_INTUITION);
    let eval_seed: u64 = stream(config.seed, STREAM_EVAL).gen();
    let mut eval_env = make_env(env_name)?;
    let mut collector = Collector::new(make_env(env_name)?, stream(config.seed, STREAM_ENV));

    let start = Instant::now();
    let mut report = RunReport {
        env: env_name.to_string(),
        seed: config.seed,
        intuition_enabled: config.intuition_enabled,
        net: intuition.map(|i| NetInfo {
            name: i.net().name().to_string(),
            source: i.source().map(str::to_string),
            sha256: i.source_sha256().map(str::to_string),
            nodes: i.net().size(),
        }),
        config: config.clone(),
        options: options.clone(),
        steps_to_solve: None,
        seconds_to_solve: None,
        total_steps: 0,
        wall_clock_seconds: 0.0,
        overhead_us_per_sample: None,
        curve: Vec::new(),
        final_eval_mean: None,
        final_eval_std: None,
        episodes: 0,
    };
    let mut intuition_seconds = 0.0;
    let mut intuition_samples = 0usize;

    while report.total_steps + config.n_steps <= options.total_steps {
        let mut buf = collect_rollout(&mut collector, &params, config.n_steps, &mut action_rng)?;
        report.total_steps += buf.len();
        report.episodes += collector.take_finished().len();

        let targets = match intuition {
            Some(i) => {
                let t0 = Instant::now();
                let t = i.targets(&buf.obs, buf.obs_dim, config.target_mode, &mut intuition_rng)?;
                intuition_seconds += t0.elapsed().as_secs_f64();
                intuition_samples += buf.len();
                Some(t)
            }
            None => None,
        };
        let (adv, ret) = compute_gae(&buf, config.gamma, config.gae_lambda);
        buf.advantages = adv;
        buf.returns = ret;
        let metrics = ppo_update(&mut params, &mut adam, &buf, config, targets.as_ref(), &mut shuffle_rng)?;

        let (mean, std) = evaluate_env(&params, eval_env.as_mut(), options.eval_episodes, eval_seed)?;
        let row = CurveRow {
            step: report.total_steps,
            mean_eval_reward: mean,
            std_eval_reward: std,
            loss_policy: metrics.loss.policy,
            loss_value: metrics.loss.value,
            loss_entropy: 0.0 - config.entropy_coef * metrics.loss.entropy,
            loss_intuition: metrics.loss.intuition,
            loss_total: metrics.loss.total,
            agreement_rate: metrics.agreement_rate,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        observer(&row);
        report.final_eval_mean = Some(mean);
        report.final_eval_std = Some(std);
        let solved_now = report.steps_to_solve.is_none() && options.solve_threshold.is_some_and(|t| mean >= t);
        if solved_now {
            report.steps_to_solve = Some(row.step);
            report.seconds_to_solve = Some(row.wall_seconds);
        }
        report.curve.push(row);
        if solved_now && options.stop_when_solved {
            break;
        }
    }
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    if intuition_samples > 0 {
        report.overhead_us_per_sample = Some(intuition_seconds * 1e6 / intuition_samples as f64);
    }
    Ok(TrainOutcome { params, report })
}
