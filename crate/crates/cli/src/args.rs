use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use shire_core::envs::env_names;
use shire_core::intuition::TargetMode;
use shire_core::ppo::PpoConfig;

#[derive(Debug, Parser)]
#[command(name = "shire", version, about = "PPO with intuition-net auxiliary losses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one policy and write a run directory.
    Train(TrainArgs),
    /// Evaluate a checkpoint with greedy actions.
    Eval(EvalArgs),
    /// Compare baseline and intuition runs over several seeds.
    Bench(BenchArgs),
    /// Time the intuition pipeline per sample.
    Overhead(OverheadArgs),
    /// Print a net, its CPTs and the posterior for a parent assignment.
    InspectNet(InspectArgs),
}

fn parse_env(s: &str) -> Result<String, String> {
    let names = env_names();
    if names.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!("unknown environment `{s}`; valid names: {}", names.join(", ")))
    }
}

fn parse_mode(s: &str) -> Result<TargetMode, String> {
    s.parse().map_err(|e: shire_core::Error| e.to_string())
}

/// PPO settings; unset values use the environment's shipped defaults.
#[derive(Debug, Clone, Args, Default)]
pub struct Hyper {
    /// Weight of the intuition loss.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Intuitive action selection: map or sample.
    #[arg(long, value_parser = parse_mode)]
    pub target_mode: Option<TargetMode>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub gae_lambda: Option<f64>,
    #[arg(long)]
    pub clip_eps: Option<f64>,
    /// Transitions per rollout.
    #[arg(long)]
    pub n_steps: Option<usize>,
    #[arg(long)]
    pub minibatch: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub entropy_coef: Option<f64>,
    #[arg(long)]
    pub value_coef: Option<f64>,
    #[arg(long)]
    pub max_grad_norm: Option<f64>,
    /// Greedy evaluation episodes after each rollout.
    #[arg(long, default_value_t = 100)]
    pub eval_episodes: usize,
    /// Total environment steps (defaults per environment).
    #[arg(long)]
    pub steps: Option<usize>,
}

impl Hyper {
    pub fn apply(&self, mut c: PpoConfig) -> PpoConfig {
        if let Some(v) = self.lambda {
            c.intuition_coef = v;
        }
        if let Some(v) = self.target_mode {
            c.target_mode = v;
        }
        macro_rules! set {
            ($($field:ident <- $opt:ident),*) => { $( if let Some(v) = self.$opt { c.$field = v; } )* };
        }
        set!(lr <- lr, gamma <- gamma, gae_lambda <- gae_lambda, clip_eps <- clip_eps, n_steps <- n_steps,
             minibatch_size <- minibatch, n_epochs <- epochs, entropy_coef <- entropy_coef,
             value_coef <- value_coef, max_grad_norm <- max_grad_norm);
        c
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_parser = parse_env)]
    pub env: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parent directory for the run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Enable the intuition loss.
    #[arg(long)]
    pub shire: bool,
    /// Net file or name (defaults to the bundled net for the environment).
    #[arg(long)]
    pub net: Option<String>,
    /// Keep training after the solve threshold is reached.
    #[arg(long)]
    pub no_stop: bool,
    /// Not supported: completed runs are immutable.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[command(flatten)]
    pub hyper: Hyper,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_parser = parse_env)]
    pub env: String,
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = parse_env)]
    pub env: String,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub net: Option<String>,
    /// Directory for the JSON report and CSV summary.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    #[command(flatten)]
    pub hyper: Hyper,
}

#[derive(Debug, Args)]
pub struct OverheadArgs {
    /// Nets to time (defaults to every bundled net).
    #[arg(long)]
    pub net: Vec<String>,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub net: String,
    /// Parent assignment, e.g. `a=positive,theta=q2`.
    #[arg(long)]
    pub given: Option<String>,
}
