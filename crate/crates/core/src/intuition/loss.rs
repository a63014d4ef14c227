//! Weighted multiclass hinge loss on policy logits.

/// Default hinge margin.
pub const MARGIN: f64 = 1.0;

/// Per-sample intuitive actions and mismatch weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntuitionTargets {
    pub actions: Vec<usize>,
    pub weights: Vec<f64>,
}

impl IntuitionTargets {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Targets for a subset of samples, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            actions: idx.iter().map(|&i| self.actions[i]).collect(),
            weights: idx.iter().map(|&i| self.weights[i]).collect(),
        }
    }
}

/// `(1/n) sum_i w_i max(0, margin - (z_i[e_i] - max_{j != e_i} z_i[j]))`.
///
/// When `grad` is given, `scale` times the gradient with respect to the
/// logits is added to it. At the kink the subgradient 0 is used.
pub fn intuition_loss(
    logits: &[f64],
    n_actions: usize,
    targets: &IntuitionTargets,
    margin: f64,
    grad: Option<(&mut [f64], f64)>,
) -> f64 {
    let n = targets.len();
    debug_assert_eq!(logits.len(), n * n_actions);
    if n == 0 {
        return 0.0;
    }
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    let mut grad = grad;
    for (i, z) in logits.chunks_exact(n_actions).enumerate() {
        let e = targets.actions[i];
        let w = targets.weights[i];
        let mut rival = usize::MAX;
        let mut rival_z = f64::NEG_INFINITY;
        for (j, &zj) in z.iter().enumerate() {
            if j != e && zj > rival_z {
                rival = j;
                rival_z = zj;
            }
        }
        let slack = margin - (z[e] - rival_z);
        if slack > 0.0 {
            total += w * slack;
            if let Some((g, scale)) = grad.as_mut() {
                let c = *scale * w * inv_n;
                g[i * n_actions + e] -= c;
                g[i * n_actions + rival] += c;
            }
        }
    }
    total * inv_n
}

/// `+1` where the executed action equals the intuitive one, else `-1`.
pub fn mismatch_vector(actions: &[usize], targets: &IntuitionTargets) -> Vec<i8> {
    actions
        .iter()
        .zip(&targets.actions)
        .map(|(a, e)| if a == e { 1 } else { -1 })
        .collect()
}

/// Fraction of `+1` entries.
pub fn agreement_rate(mismatch: &[i8]) -> f64 {
    if mismatch.is_empty() {
        return 0.0;
    }
    mismatch.iter().filter(|&&m| m == 1).count() as f64 / mismatch.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(e: usize, w: f64) -> IntuitionTargets {
        IntuitionTargets { actions: vec![e], weights: vec![w] }
    }

    #[test]
    fn satisfied_margin_is_free() {
        let t = IntuitionTargets { actions: vec![0, 2], weights: vec![1.0, 1.0] };
        assert_eq!(intuition_loss(&[2.0, 1.0, 0.0, 0.0, 0.5, 1.5], 3, &t, MARGIN, None), 0.0);
    }

    #[test]
    fn hand_values() {
        assert_eq!(intuition_loss(&[0.0, 0.0], 2, &one(1, 1.0), MARGIN, None), 1.0);
        // s = z1 - z0 = -0.5, label -1
        let l = intuition_loss(&[0.5, 0.0], 2, &one(0, 1.0), MARGIN, None);
        assert_eq!(l, 0.5);
        assert_eq!(l, f64::max(0.0, 1.0 - (-1.0) * (-0.5)));
    }

    #[test]
    fn gradient_targets_rival() {
        let mut g = vec![0.0; 3];
        intuition_loss(&[0.0, 0.3, 0.2], 3, &one(0, 2.0), MARGIN, Some((&mut g, 0.5)));
        assert_eq!(g, vec![-1.0, 1.0, 0.0]);
    }

    #[test]
    fn mismatch_and_agreement() {
        let t = IntuitionTargets { actions: vec![0, 1, 2, 3], weights: vec![1.0; 4] };
        assert_eq!(mismatch_vector(&[0, 1, 2, 3], &t), vec![1; 4]);
        assert_eq!(mismatch_vector(&[1, 0, 3, 2], &t), vec![-1; 4]);
        let m = mismatch_vector(&[0, 0, 2, 0], &t);
        assert_eq!(agreement_rate(&m), 0.5);
    }
}
