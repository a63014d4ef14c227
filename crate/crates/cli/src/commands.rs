use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use serde_json::json;
use shire_core::bench::{compare, evaluate, measure_overhead, SolveRule};
use shire_core::checkpoint::{load_for_env, save_checkpoint};
use shire_core::intuition::{default_net_name, load_net, ActionMapping, AbstractAssignment, Intuition, NodeRole, SHIPPED_NETS};
use shire_core::ppo::{train_with_observer, write_curve_csv, CurveRow, PpoConfig, TrainOptions};
use shire_core::{Error, Result};

use crate::args::{BenchArgs, Command, EvalArgs, Hyper, InspectArgs, OverheadArgs, TrainArgs};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::Overhead(a) => overhead(a),
        Command::InspectNet(a) => inspect(a),
    }
}

fn load_intuition(env: &str, net: Option<&str>) -> Result<Intuition> {
    let name = match net {
        Some(n) => n.to_string(),
        None => default_net_name(env)
            .ok_or_else(|| Error::Config(format!("no bundled net for env `{env}`")))?
            .to_string(),
    };
    let intuition = Intuition::from_loaded(&load_net(&name)?)?;
    intuition.check_env(env)?;
    Ok(intuition)
}

fn settings(env: &str, hyper: &Hyper) -> Result<(PpoConfig, TrainOptions)> {
    let config = hyper.apply(PpoConfig::for_env(env));
    config.validate()?;
    let mut options = TrainOptions::for_env(env);
    options.eval_episodes = hyper.eval_episodes;
    if let Some(s) = hyper.steps {
        options.total_steps = s;
    }
    Ok((config, options))
}

fn timestamp() -> String {
    Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string()
}

/// Create a fresh directory under `parent`; existing directories are never reused.
fn fresh_dir(parent: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(parent)?;
    let dir = parent.join(name);
    fs::create_dir(&dir).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("cannot create run directory {}: {e}", dir.display())))
    })?;
    Ok(dir)
}

fn progress(label: &str) -> impl FnMut(&CurveRow) + '_ {
    move |r: &CurveRow| {
        let agree = r.agreement_rate.map(|a| format!(" agree {a:.3}")).unwrap_or_default();
        eprintln!(
            "[{label}] step {:>8}  eval {:>9.3} ± {:<8.3} policy {:+.4} value {:.4} intuition {:.4}{agree}",
            r.step, r.mean_eval_reward, r.std_eval_reward, r.loss_policy, r.loss_value, r.loss_intuition
        );
    }
}

fn train(a: TrainArgs) -> Result<()> {
    if let Some(dir) = &a.resume {
        return Err(Error::Usage(format!(
            "refusing to resume {}: completed runs are immutable, start a new run instead",
            dir.display()
        )));
    }
    if a.net.is_some() && !a.shire {
        return Err(Error::Usage("--net only applies together with --shire".into()));
    }
    let (mut config, mut options) = settings(&a.env, &a.hyper)?;
    config.seed = a.seed;
    config.intuition_enabled = a.shire;
    options.stop_when_solved = !a.no_stop;
    let intuition = if a.shire {
        Some(load_intuition(&a.env, a.net.as_deref())?)
    } else {
        None
    };

    let created = timestamp();
    let dir = fresh_dir(&a.out, &format!("{}-{}-seed{}", a.env, created, a.seed))?;
    let label = if a.shire { "shire" } else { "baseline" };
    let outcome = train_with_observer(&a.env, intuition.as_ref(), &config, &options, &mut progress(label))?;
    let report = &outcome.report;

    let manifest = json!({
        "format": "shire-run/1",
        "created": created,
        "argv": std::env::args().collect::<Vec<_>>(),
        "report": report,
    });
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    write_curve_csv(&report.curve, fs::File::create(dir.join("curve.csv"))?)?;
    save_checkpoint(&outcome.params, &dir.join("checkpoint.bin"))?;

    println!("run directory: {}", dir.display());
    match report.steps_to_solve {
        Some(s) => println!("solved after {s} steps ({:.1} s)", report.seconds_to_solve.unwrap_or(0.0)),
        None => println!("not solved within {} steps", report.total_steps),
    }
    if let (Some(m), Some(s)) = (report.final_eval_mean, report.final_eval_std) {
        println!("final eval: {m:.3} ± {s:.3}");
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let params = load_for_env(&a.checkpoint, &a.env)?;
    let (mean, std) = evaluate(&params, &a.env, a.episodes, a.seed)?;
    println!("{}: {mean:.3} ± {std:.3} over {} episodes", a.env, a.episodes);
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let (config, options) = settings(&a.env, &a.hyper)?;
    let intuition = load_intuition(&a.env, a.net.as_deref())?;
    let rule = SolveRule::for_env(&a.env);
    let dir = fresh_dir(&a.out, &format!("bench-{}-{}", a.env, timestamp()))?;
    let report = compare(&a.env, &intuition, &config, &options, rule, &a.seeds, &mut |c| {
        let fmt = |s: Option<usize>| s.map_or("unsolved".to_string(), |s| s.to_string());
        eprintln!(
            "[bench] seed {} threshold {:.3}: baseline {} shire {} gain {}",
            c.seed,
            c.threshold,
            fmt(c.baseline_steps),
            fmt(c.shire_steps),
            c.sample_gain_percent.map_or("n/a".to_string(), |g| format!("{g:.2}%"))
        );
    })?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    report.write_csv(fs::File::create(dir.join("summary.csv"))?)?;
    report.write_csv(std::io::stdout())?;
    eprintln!("bench directory: {}", dir.display());
    Ok(())
}

fn overhead(a: OverheadArgs) -> Result<()> {
    let nets: Vec<String> = if a.net.is_empty() {
        SHIPPED_NETS.iter().map(|(n, _)| n.to_string()).collect()
    } else {
        a.net.clone()
    };
    println!("{:<22} {:>5} {:>12} {:>12}", "net", "nodes", "mean_us", "best_us");
    for name in nets {
        let intuition = Intuition::from_loaded(&load_net(&name)?)?;
        let r = measure_overhead(&intuition, a.samples, a.repeats, a.seed)?;
        println!("{:<22} {:>5} {:>12.4} {:>12.4}", r.net, r.nodes, r.mean_us_per_sample, r.best_us_per_sample);
    }
    Ok(())
}

fn inspect(a: InspectArgs) -> Result<()> {
    let loaded = load_net(&a.net)?;
    let net = &loaded.net;
    println!("net {:?} for env {:?} ({} nodes, from {})", net.name(), net.env(), net.size(), loaded.source);
    for node in net.nodes() {
        let role = match node.role {
            NodeRole::Abstract => "parent",
            NodeRole::Action => "action",
        };
        let parents = if node.parents.is_empty() {
            String::new()
        } else {
            format!(" | {}", node.parents.join(", "))
        };
        println!("  {role} {} [{}]{parents}", node.name, node.states.join(", "));
    }
    println!("cpts:");
    for node in net.nodes() {
        let cpt = net.cpt(&node.name).expect("every node has a CPT");
        let radices: Vec<usize> = node
            .parents
            .iter()
            .map(|p| net.node(p).expect("validated parent").states.len())
            .collect();
        for (r, row) in cpt.rows.iter().enumerate() {
            let mut rem = r;
            let mut given = vec![String::new(); radices.len()];
            for k in (0..radices.len()).rev() {
                let parent = net.node(&node.parents[k]).expect("validated parent");
                given[k] = format!("{}={}", parent.name, parent.states[rem % radices[k]]);
                rem /= radices[k];
            }
            let given = if given.is_empty() { String::new() } else { format!(" | {}", given.join(", ")) };
            let probs: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            println!("  {}{given} -> [{}]", node.name, probs.join(", "));
        }
    }
    println!("actions:");
    let actions = net.env_actions();
    for c in 0..net.n_configs() {
        let target = match net.mapping(c) {
            ActionMapping::Fixed(a) => actions[*a].clone(),
            ActionMapping::ByMarginal(cands) => format!(
                "larger marginal of {}",
                cands.iter().map(|&(_, _, a)| actions[a].as_str()).collect::<Vec<_>>().join("/")
            ),
        };
        println!("  ({}) -> {target}  weight {}", net.config_label(c), net.config_weight(c));
    }
    if let Some(given) = &a.given {
        let assignment = AbstractAssignment::parse(given)?;
        let post = net.infer_action_posterior(&assignment)?;
        let probs: Vec<String> = post.probs.iter().map(|p| p.to_string()).collect();
        println!("posterior given {given}: ({})", probs.join(", "));
        for (c, p) in post.probs.iter().enumerate() {
            println!("  P({}) = {p}", net.config_label(c));
        }
        let (action, config) = net.map_action(&post.probs);
        println!("intuitive action: {} (configuration {})", actions[action], net.config_label(config));
    }
    Ok(())
}

