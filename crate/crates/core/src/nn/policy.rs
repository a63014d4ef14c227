//! Categorical policy helpers over raw logits.

use rand::Rng;

use crate::error::{Error, Result};

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= sum);
    p
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Draw an action from softmax(logits). Returns the action and its log-probability.
pub fn sample_action<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> Result<(usize, f64)> {
    if logits.iter().any(|z| z.is_nan()) {
        return Err(Error::Numerical("NaN logit".into()));
    }
    let logp = log_softmax(logits);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut action = logits.len() - 1;
    for (i, lp) in logp.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            action = i;
            break;
        }
    }
    Ok((action, logp[action]))
}

/// Per-row log-probability of `actions` and entropy, for a row-major
/// `n x n_actions` logit matrix.
pub fn logprob_entropy(logits: &[f64], n_actions: usize, actions: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_actions == 0 || logits.len() != actions.len() * n_actions {
        return Err(Error::Config("logit matrix does not match action count".into()));
    }
    let mut logps = Vec::with_capacity(actions.len());
    let mut ents = Vec::with_capacity(actions.len());
    for (row, &a) in logits.chunks_exact(n_actions).zip(actions) {
        if a >= n_actions {
            return Err(Error::Usage(format!("action index {a} out of range")));
        }
        let lp = log_softmax(row);
        logps.push(lp[a]);
        ents.push(-lp.iter().map(|l| if l.is_finite() { l.exp() * l } else { 0.0 }).sum::<f64>());
    }
    Ok((logps, ents))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symmetric_logits_are_uniform() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn saturated_logits() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let (a, lp) = sample_action(&[1000.0, 0.0], &mut rng).unwrap();
            assert_eq!(a, 0);
            assert!(lp.abs() < 1e-12);
        }
        let (_, ent) = logprob_entropy(&[1000.0, 0.0, -1000.0], 3, &[0]).unwrap();
        assert!(ent[0].abs() < 1e-12);
    }

    #[test]
    fn nan_logits_are_numerical_failure() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_action(&[f64::NAN, 0.0], &mut rng), Err(Error::Numerical(_))));
    }

    #[test]
    fn empirical_frequencies_match_softmax() {
        let logits = [1.0, 2.0, 3.0];
        // exact softmax, computed independently of the helper
        let e: Vec<f64> = logits.iter().map(|z: &f64| z.exp()).collect();
        let z: f64 = e.iter().sum();
        let exact: Vec<f64> = e.iter().map(|x| x / z).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            let (a, lp) = sample_action(&logits, &mut rng).unwrap();
            assert!((lp - exact[a].ln()).abs() < 1e-12);
            counts[a] += 1;
        }
        for k in 0..3 {
            let p = exact[k];
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((counts[k] as f64 / n as f64 - p).abs() < 3.0 * sigma, "action {k}");
        }
    }

    #[test]
    fn uniform_entropy_is_ln_k() {
        let (_, ent) = logprob_entropy(&[0.5; 5], 5, &[2]).unwrap();
        assert!((ent[0] - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_two_action_entropy() {
        let (lp, ent) = logprob_entropy(&[0.0, 3f64.ln()], 2, &[1]).unwrap();
        let expect = -(0.25 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
        assert!((ent[0] - expect).abs() < 1e-12);
        assert!((lp[0] - 0.75f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }
}
