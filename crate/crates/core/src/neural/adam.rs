use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates for a list of parameter vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    /// `sizes` lists the length of every parameter vector.
    pub fn new(config: AdamConfig, sizes: impl IntoIterator<Item = usize>) -> Self {
        let (m, v) = sizes
            .into_iter()
            .map(|n| (vec![0.0; n], vec![0.0; n]))
            .unzip();
        Self {
            config,
            step: 0,
            m,
            v,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update. `params` and `grads` must follow the
    /// layout given to [`AdamState::new`].
    pub fn update<'a>(
        &mut self,
        params: impl IntoIterator<Item = &'a mut Vec<f64>>,
        grads: &[Vec<f64>],
    ) {
        self.step += 1;
        let c = self.config;
        let t = self.step as f64;
        let bc1 = 1.0 - libm::pow(c.beta1, t);
        let bc2 = 1.0 - libm::pow(c.beta2, t);
        let mut count = 0;
        for (i, p) in params.into_iter().enumerate() {
            let g = &grads[i];
            assert_eq!(
                p.len(),
                g.len(),
                "gradient length differs from parameter length"
            );
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..p.len() {
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                p[j] -= c.learning_rate * mh / (libm::sqrt(vh) + c.epsilon);
            }
            count += 1;
        }
        assert_eq!(
            count,
            self.m.len(),
            "parameter count differs from optimizer layout"
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = vec![vec![1.0, -2.0, 3.0]];
        let mut s = AdamState::new(AdamConfig::default(), [3]);
        s.update(p.iter_mut(), &[vec![0.5, -4.0, 1e-3]]);
        // the bias-corrected first step is lr · g/|g| up to epsilon
        let expect = [1.0 - 1e-3, -2.0 + 1e-3, 3.0 - 1e-3];
        for (a, b) in p[0].iter().zip(expect) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_gradient_is_a_null_update() {
        let mut p = vec![vec![0.25, -7.0]];
        let mut s = AdamState::new(AdamConfig::default(), [2]);
        s.update(p.iter_mut(), &[vec![0.0, 0.0]]);
        assert_eq!(p[0], vec![0.25, -7.0]);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = vec![vec![1.0]];
        let mut s = AdamState::new(
            AdamConfig {
                learning_rate: 0.1,
                ..AdamConfig::default()
            },
            [1],
        );
        for _ in 0..200 {
            let g = vec![vec![2.0 * p[0][0]]];
            s.update(p.iter_mut(), &g);
        }
        assert!(p[0][0].abs() < 0.05, "{}", p[0][0]);
        assert_eq!(s.steps(), 200);
    }
}
