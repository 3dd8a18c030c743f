use serde::{Deserialize, Serialize};

use super::params::ParameterSet;
use crate::error::{Error, Result};

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
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Moment estimates for one [`ParameterSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first: ParameterSet,
    second: ParameterSet,
    step: u64,
}

impl AdamState {
    pub fn new(params: &ParameterSet, config: AdamConfig) -> Self {
        Self {
            config,
            first: params.zeros_like(),
            second: params.zeros_like(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one bias-corrected Adam update to `params`.
    ///
    /// Nothing is modified when `grads` holds a non-finite entry.
    pub fn step(&mut self, params: &mut ParameterSet, grads: &ParameterSet) -> Result<()> {
        params.check_compatible(grads, "adam gradients")?;
        params.check_compatible(&self.first, "adam state")?;
        if let Some(name) = grads.first_non_finite() {
            return Err(Error::NonFinite(format!("gradient of parameter {name}")));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for i in 0..params.len() {
            let g = grads.values(i);
            let m = self.first.values_mut(i);
            for (m, g) in m.iter_mut().zip(g) {
                *m = beta1 * *m + (1.0 - beta1) * g;
            }
            let v = self.second.values_mut(i);
            for (v, g) in v.iter_mut().zip(g) {
                *v = beta2 * *v + (1.0 - beta2) * g * g;
            }
            let m = self.first.values(i);
            let v = self.second.values(i);
            for ((p, m), v) in params.values_mut(i).iter_mut().zip(m).zip(v) {
                let m_hat = m / c1;
                let v_hat = v / c2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn scalar(v: f64) -> ParameterSet {
        let mut p = ParameterSet::new();
        p.push(Tensor {
            name: "theta".into(),
            shape: vec![1],
            values: vec![v],
        });
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = scalar(0.7);
        let mut s = AdamState::new(&p, AdamConfig::default());
        for _ in 0..5 {
            s.step(&mut p, &scalar(0.0)).unwrap();
        }
        assert_eq!(p.values(0)[0], 0.7);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = g, v_hat = g^2 after bias correction, so the step is
        // lr * 1 / (1 + 1e-8).
        let mut p = scalar(1.0);
        let mut s = AdamState::new(&p, AdamConfig::with_learning_rate(3e-4));
        s.step(&mut p, &scalar(1.0)).unwrap();
        let expected = 1.0 - 3e-4 / (1.0 + 1e-8);
        assert!((p.values(0)[0] - expected).abs() < 1e-15);
        assert!((1.0 - p.values(0)[0] - 3e-4).abs() < 1e-11);
    }

    #[test]
    fn non_finite_gradient_is_named() {
        let mut p = scalar(1.0);
        let mut s = AdamState::new(&p, AdamConfig::default());
        let err = s.step(&mut p, &scalar(f64::NAN)).unwrap_err();
        assert!(err.to_string().contains("theta"));
        assert_eq!(p.values(0)[0], 1.0);
        assert_eq!(s.steps(), 0);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let mut p = scalar(0.3);
            let mut s = AdamState::new(&p, AdamConfig::default());
            for k in 0..50 {
                let g = (k as f64 * 0.37).sin();
                s.step(&mut p, &scalar(g)).unwrap();
            }
            p.values(0)[0].to_bits()
        };
        assert_eq!(run(), run());
    }
}
