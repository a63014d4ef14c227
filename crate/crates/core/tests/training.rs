//! Short end-to-end training runs.

use shire_core::intuition::{load_net, Intuition};
use shire_core::ppo::{train, PpoConfig, RunReport, TrainOptions};

fn short(env: &str) -> TrainOptions {
    TrainOptions { total_steps: 3 * 2048, eval_episodes: 5, stop_when_solved: false, ..TrainOptions::for_env(env) }
}

fn curve_bits(r: &RunReport) -> Vec<[u64; 6]> {
    r.curve
        .iter()
        .map(|c| {
            [c.step as f64, c.mean_eval_reward, c.std_eval_reward, c.loss_policy, c.loss_value, c.loss_total]
                .map(f64::to_bits)
        })
        .collect()
}

#[test]
fn zero_weight_matches_disabled_intuition() {
    for (env, net) in [("cartpole", "cartpole"), ("lander", "lander_antiparallel"), ("taxi", "taxi")] {
        let intuition = Intuition::from_loaded(&load_net(net).unwrap()).unwrap();
        let off = PpoConfig { intuition_enabled: false, seed: 5, ..PpoConfig::for_env(env) };
        let zero = PpoConfig { intuition_enabled: true, intuition_coef: 0.0, ..off.clone() };
        let a = train(env, None, &off, &short(env)).unwrap();
        let b = train(env, Some(&intuition), &zero, &short(env)).unwrap();
        assert_eq!(curve_bits(&a.report), curve_bits(&b.report), "{env}");
        assert_eq!(a.params, b.params, "{env}");
        // the intuition term is still measured for logging
        assert!(b.report.curve.iter().all(|r| r.agreement_rate.is_some()));
    }
}

#[test]
fn intuition_changes_learning_and_raises_agreement() {
    let env = "cartpole";
    let intuition = Intuition::from_loaded(&load_net("cartpole").unwrap()).unwrap();
    let on = PpoConfig { intuition_enabled: true, intuition_coef: 1.0, seed: 2, ..PpoConfig::for_env(env) };
    let off = PpoConfig { intuition_enabled: false, ..on.clone() };
    let a = train(env, Some(&intuition), &on, &short(env)).unwrap();
    let b = train(env, None, &off, &short(env)).unwrap();
    assert_ne!(a.params, b.params);
    let agree: Vec<f64> = a.report.curve.iter().map(|r| r.agreement_rate.unwrap()).collect();
    assert!(agree.last().unwrap() > agree.first().unwrap(), "{agree:?}");
}

#[test]
fn identical_seeds_give_identical_runs() {
    let env = "mountaincar";
    let intuition = Intuition::from_loaded(&load_net("mountaincar").unwrap()).unwrap();
    let config = PpoConfig { intuition_enabled: true, seed: 9, ..PpoConfig::for_env(env) };
    let a = train(env, Some(&intuition), &config, &short(env)).unwrap();
    let b = train(env, Some(&intuition), &config, &short(env)).unwrap();
    assert_eq!(curve_bits(&a.report), curve_bits(&b.report));
    assert_eq!(a.params, b.params);
    let c = train(env, Some(&intuition), &PpoConfig { seed: 10, ..config }, &short(env)).unwrap();
    assert_ne!(a.params, c.params);
}
