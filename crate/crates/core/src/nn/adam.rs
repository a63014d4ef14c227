use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for Adam, shaped like the parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "parameter buffer does not match optimizer state");
        assert_eq!(grads.len(), self.m.len(), "gradient buffer does not match optimizer state");
        let AdamConfig { beta1, beta2, eps } = self.config;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = AdamState::new(3, AdamConfig::default());
        let mut p = vec![1.0, -2.0, 0.5];
        s.step(&mut p, &[0.0; 3], 1e-3);
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.steps(), 1);
    }

    #[test]
    fn first_step_matches_hand_computation() {
        let mut s = AdamState::new(2, AdamConfig::default());
        let mut p = vec![0.0, 0.0];
        let g = [0.3, -2.0];
        s.step(&mut p, &g, 0.01);
        for (pi, gi) in p.iter().zip(g) {
            // m_hat = g, v_hat = g^2
            let expect = -0.01 * gi / (gi.abs() + 1e-8);
            assert!((pi - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_gradient_step_tends_to_lr() {
        let mut s = AdamState::new(1, AdamConfig::default());
        let mut p = vec![0.0];
        let lr = 1e-3;
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = p[0];
            s.step(&mut p, &[0.7], lr);
            last = before - p[0];
        }
        assert!((last - lr).abs() < 1e-9);
        assert_eq!(s.steps(), 5000);
    }
}
