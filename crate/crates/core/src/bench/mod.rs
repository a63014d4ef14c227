//! Evaluation, solve detection, baseline-versus-intuition comparisons and
//! overhead timing.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{env_spec, make_env, Env};
use crate::error::{Error, Result};
use crate::intuition::{intuition_loss, Intuition, TargetMode, MARGIN};
use crate::nn::{argmax, ActorCriticParams};
use crate::ppo::{train, CurveRow, PpoConfig, RunReport, TrainOptions};

/// Greedy evaluation over `episodes` fresh episodes of `env_name`.
/// Returns the mean and (population) standard deviation of episode returns.
pub fn evaluate(params: &ActorCriticParams, env_name: &str, episodes: usize, seed: u64) -> Result<(f64, f64)> {
    let mut env = make_env(env_name)?;
    evaluate_env(params, env.as_mut(), episodes, seed)
}

pub fn evaluate_env(params: &ActorCriticParams, env: &mut dyn Env, episodes: usize, seed: u64) -> Result<(f64, f64)> {
    let spec = env.spec().clone();
    let shape = params.shape();
    if shape.obs_dim != spec.feature_dim || shape.n_actions != spec.n_actions {
        return Err(Error::Config(format!(
            "policy with {} inputs and {} actions does not fit env `{}` ({} inputs, {} actions)",
            shape.obs_dim, shape.n_actions, spec.name, spec.feature_dim, spec.n_actions
        )));
    }
    if episodes == 0 {
        return Err(Error::Usage("at least one evaluation episode is required".into()));
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let mut features = vec![0.0; spec.feature_dim];
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset(seeds.gen());
        let mut total = 0.0;
        loop {
            env.features(&obs, &mut features);
            let action = argmax(&params.logits(&features)?);
            let step = env.step(action)?;
            total += step.reward;
            if step.done() {
                break;
            }
            obs = step.obs;
        }
        returns.push(total);
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// How the solve threshold of an environment is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SolveRule {
    /// Fixed solved-state reward.
    Ssr { threshold: f64 },
    /// Best evaluation mean of the baseline run, optionally capped.
    Bbr { cap: Option<f64> },
}

impl SolveRule {
    pub fn for_env(env: &str) -> Self {
        match env {
            "taxi" => SolveRule::Bbr { cap: Some(8.1) },
            _ => match env_spec(env).ok().and_then(|s| s.ssr) {
                Some(threshold) => SolveRule::Ssr { threshold },
                None => SolveRule::Bbr { cap: None },
            },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SolveRule::Ssr { .. } => "SSR",
            SolveRule::Bbr { .. } => "BBR",
        }
    }
}

/// First step whose evaluation mean reaches `threshold`.
pub fn steps_to_solve(curve: &[CurveRow], threshold: f64) -> Result<Option<usize>> {
    if curve.is_empty() {
        return Err(Error::Usage("empty learning curve".into()));
    }
    Ok(curve.iter().find(|r| r.mean_eval_reward >= threshold).map(|r| r.step))
}

/// Wall-clock seconds at the first step reaching `threshold`.
pub fn seconds_to_solve(curve: &[CurveRow], threshold: f64) -> Option<f64> {
    curve.iter().find(|r| r.mean_eval_reward >= threshold).map(|r| r.wall_seconds)
}

/// Best evaluation mean of a curve.
pub fn best_reward(curve: &[CurveRow]) -> Option<f64> {
    curve.iter().map(|r| r.mean_eval_reward).reduce(f64::max)
}

/// Relative reduction from `baseline` to `shire`, in percent.
pub fn gain_percent(baseline: f64, shire: f64) -> f64 {
    100.0 * (baseline - shire) / baseline
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    BothSolved,
    ShireOnly,
    BaselineOnly,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub rule: SolveRule,
    pub threshold: f64,
    pub baseline: RunReport,
    pub shire: RunReport,
    pub baseline_steps: Option<usize>,
    pub shire_steps: Option<usize>,
    pub baseline_seconds: Option<f64>,
    pub shire_seconds: Option<f64>,
    /// Only present when both runs reached the threshold.
    pub sample_gain_percent: Option<f64>,
    pub time_gain_percent: Option<f64>,
    pub outcome: Outcome,
}

impl ComparisonReport {
    pub fn new(seed: u64, rule: SolveRule, threshold: f64, baseline: RunReport, shire: RunReport) -> Self {
        let b_steps = steps_to_solve(&baseline.curve, threshold).ok().flatten();
        let s_steps = steps_to_solve(&shire.curve, threshold).ok().flatten();
        let b_secs = seconds_to_solve(&baseline.curve, threshold);
        let s_secs = seconds_to_solve(&shire.curve, threshold);
        let outcome = match (b_steps, s_steps) {
            (Some(_), Some(_)) => Outcome::BothSolved,
            (None, Some(_)) => Outcome::ShireOnly,
            (Some(_), None) => Outcome::BaselineOnly,
            (None, None) => Outcome::Inconclusive,
        };
        let both = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) if a > 0.0 => Some(gain_percent(a, b)),
            _ => None,
        };
        Self {
            seed,
            rule,
            threshold,
            sample_gain_percent: both(b_steps.map(|s| s as f64), s_steps.map(|s| s as f64)),
            time_gain_percent: both(b_secs, s_secs),
            baseline_steps: b_steps,
            shire_steps: s_steps,
            baseline_seconds: b_secs,
            shire_seconds: s_secs,
            baseline,
            shire,
            outcome,
        }
    }

    /// The intuition arm reached the threshold no later than the baseline.
    pub fn shire_not_slower(&self) -> bool {
        match (self.baseline_steps, self.shire_steps) {
            (Some(b), Some(s)) => s <= b,
            (None, Some(_)) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub env: String,
    pub rule: SolveRule,
    pub comparisons: Vec<ComparisonReport>,
    pub median_sample_gain_percent: Option<f64>,
    pub median_time_gain_percent: Option<f64>,
}

impl BenchReport {
    pub fn new(env: &str, rule: SolveRule, comparisons: Vec<ComparisonReport>) -> Self {
        let gains: Vec<f64> = comparisons.iter().filter_map(|c| c.sample_gain_percent).collect();
        let times: Vec<f64> = comparisons.iter().filter_map(|c| c.time_gain_percent).collect();
        Self {
            env: env.to_string(),
            rule,
            median_sample_gain_percent: median(&gains),
            median_time_gain_percent: median(&times),
            comparisons,
        }
    }

    /// CSV summary, one row per seed plus a median row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "environment",
            "seed",
            "criterion",
            "threshold",
            "baseline_steps",
            "shire_steps",
            "sample_gain_percent",
            "baseline_minutes",
            "shire_minutes",
            "time_gain_percent",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        let opt_u = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.comparisons {
            w.write_record([
                self.env.clone(),
                c.seed.to_string(),
                c.rule.label().to_string(),
                format!("{:.4}", c.threshold),
                opt_u(c.baseline_steps),
                opt_u(c.shire_steps),
                opt(c.sample_gain_percent),
                opt(c.baseline_seconds.map(|s| s / 60.0)),
                opt(c.shire_seconds.map(|s| s / 60.0)),
                opt(c.time_gain_percent),
            ])?;
        }
        let med_u = |f: fn(&ComparisonReport) -> Option<usize>| {
            let v: Vec<f64> = self.comparisons.iter().filter_map(f).map(|s| s as f64).collect();
            opt(median(&v))
        };
        let med_f = |f: fn(&ComparisonReport) -> Option<f64>| {
            let v: Vec<f64> = self.comparisons.iter().filter_map(f).collect();
            opt(median(&v).map(|s| s / 60.0))
        };
        w.write_record([
            self.env.clone(),
            "median".into(),
            self.rule.label().to_string(),
            String::new(),
            med_u(|c| c.baseline_steps),
            med_u(|c| c.shire_steps),
            opt(self.median_sample_gain_percent),
            med_f(|c| c.baseline_seconds),
            med_f(|c| c.shire_seconds),
            opt(self.median_time_gain_percent),
        ])?;
        w.flush()?;
        Ok(())
    }
}

fn arm_config(config: &PpoConfig, seed: u64, enabled: bool) -> PpoConfig {
    PpoConfig {
        seed,
        intuition_enabled: enabled,
        ..config.clone()
    }
}

/// Train the baseline arm and derive the threshold from `rule`.
pub fn run_baseline(
    env: &str,
    config: &PpoConfig,
    options: &TrainOptions,
    rule: SolveRule,
    seed: u64,
) -> Result<(RunReport, f64)> {
    let cfg = arm_config(config, seed, false);
    match rule {
        SolveRule::Ssr { threshold } => {
            let opts = TrainOptions {
                solve_threshold: Some(threshold),
                ..options.clone()
            };
            Ok((train(env, None, &cfg, &opts)?.report, threshold))
        }
        SolveRule::Bbr { cap } => {
            let opts = TrainOptions {
                solve_threshold: None,
                stop_when_solved: false,
                ..options.clone()
            };
            let mut report = train(env, None, &cfg, &opts)?.report;
            let best = best_reward(&report.curve)
                .ok_or_else(|| Error::Config("baseline budget too small for a single rollout".into()))?;
            let threshold = cap.map_or(best, |c| c.min(best));
            report.steps_to_solve = steps_to_solve(&report.curve, threshold)?;
            report.seconds_to_solve = seconds_to_solve(&report.curve, threshold);
            Ok((report, threshold))
        }
    }
}

/// Train the intuition arm until it reaches `threshold` or the budget ends.
pub fn run_shire(
    env: &str,
    intuition: &Intuition,
    config: &PpoConfig,
    options: &TrainOptions,
    threshold: f64,
    seed: u64,
) -> Result<RunReport> {
    let cfg = arm_config(config, seed, true);
    let opts = TrainOptions {
        solve_threshold: Some(threshold),
        stop_when_solved: true,
        ..options.clone()
    };
    Ok(train(env, Some(intuition), &cfg, &opts)?.report)
}

/// Matched-seed baseline versus intuition runs.
pub fn compare(
    env: &str,
    intuition: &Intuition,
    config: &PpoConfig,
    options: &TrainOptions,
    rule: SolveRule,
    seeds: &[u64],
    progress: &mut dyn FnMut(&ComparisonReport),
) -> Result<BenchReport> {
    if seeds.is_empty() {
        return Err(Error::Usage("at least one seed is required".into()));
    }
    let mut out = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let (baseline, threshold) = run_baseline(env, config, options, rule, seed)?;
        let shire = run_shire(env, intuition, config, options, threshold, seed)?;
        let c = ComparisonReport::new(seed, rule, threshold, baseline, shire);
        progress(&c);
        out.push(c);
    }
    Ok(BenchReport::new(env, rule, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub net: String,
    pub nodes: usize,
    pub samples: usize,
    pub repeats: usize,
    /// Mean over all timed passes.
    pub mean_us_per_sample: f64,
    /// Fastest timed pass.
    pub best_us_per_sample: f64,
}

/// Time encoding, inference, target selection and the hinge loss over a
/// buffer of `n_samples` observations gathered with uniformly random
/// actions. Environment stepping happens before timing starts; one
/// untimed warm-up pass precedes `repeats` timed passes.
pub fn measure_overhead(intuition: &Intuition, n_samples: usize, repeats: usize, seed: u64) -> Result<OverheadReport> {
    if n_samples == 0 || repeats == 0 {
        return Err(Error::Usage("overhead measurement needs samples and repeats".into()));
    }
    let mut env = make_env(intuition.net().env())?;
    let spec = env.spec().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs_buf = Vec::with_capacity(n_samples * spec.obs_dim);
    let mut obs = env.reset(rng.gen());
    while obs_buf.len() < n_samples * spec.obs_dim {
        obs_buf.extend_from_slice(&obs);
        let step = env.step(rng.gen_range(0..spec.n_actions))?;
        obs = if step.done() { env.reset(rng.gen()) } else { step.obs };
    }
    let logits: Vec<f64> = (0..n_samples * spec.n_actions).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut grad = vec![0.0; logits.len()];

    let mut pass = |rng: &mut ChaCha8Rng| -> Result<f64> {
        let t0 = Instant::now();
        let targets = intuition.targets(&obs_buf, spec.obs_dim, TargetMode::Map, rng)?;
        let loss = intuition_loss(&logits, spec.n_actions, &targets, MARGIN, Some((&mut grad, 1.0)));
        std::hint::black_box(loss);
        Ok(t0.elapsed().as_secs_f64())
    };
    pass(&mut rng)?;
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        times.push(pass(&mut rng)?);
    }
    let per = |t: f64| t * 1e6 / n_samples as f64;
    Ok(OverheadReport {
        net: intuition.net().name().to_string(),
        nodes: intuition.net().size(),
        samples: n_samples,
        repeats,
        mean_us_per_sample: per(times.iter().sum::<f64>() / repeats as f64),
        best_us_per_sample: per(times.iter().cloned().fold(f64::INFINITY, f64::min)),
    })
}
