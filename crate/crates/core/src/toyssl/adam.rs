use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, MlpModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::param("lr", format!("must be >= 0, got {}", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::param(name, format!("must lie in [0, 1), got {b}")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::param("eps", format!("must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

/// First/second moment estimates over a fixed list of flat tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zeroed state for tensors of the given lengths.
    pub fn new(sizes: &[usize]) -> Self {
        Self {
            step: 0,
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One weight tensor and one bias tensor per layer.
    pub fn for_model(model: &MlpModel) -> Self {
        let sizes: Vec<usize> = model.layers().flat_map(|l| [l.weight.len(), l.bias.len()]).collect();
        Self::new(&sizes)
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Bias-corrected Adam update of every tensor in place.
    pub fn update(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], cfg: &AdamConfig) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} tensors, got {} params and {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.first[i].len() || g.len() != self.first[i].len() {
                return Err(Error::Shape(format!("tensor {i} changed size")));
            }
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::TrainingDivergence {
                epoch: self.step as usize + 1,
                last_good_epoch: self.step as usize,
                reason: "non-finite gradient".into(),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            for k in 0..p.len() {
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }
}

/// Applies one Adam update to every layer of `model`.
pub fn adam_step(model: &mut MlpModel, grads: &Gradients, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    let mut params: Vec<&mut [f64]> = model
        .layers_mut()
        .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
        .collect();
    let flat: Vec<&[f64]> = grads
        .layers
        .iter()
        .flat_map(|g| [g.weight.as_slice(), g.bias.as_slice()])
        .collect();
    state.update(&mut params, &flat, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut state = AdamState::new(&[3]);
        let mut p = [1.0, -2.0, 3.0];
        state.update(&mut [&mut p], &[&[0.0; 3]], &AdamConfig::default()).unwrap();
        assert_eq!(p, [1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // t = 1: m̂ = g, v̂ = g², so the step is lr · g / (|g| + eps).
        let cfg = AdamConfig { lr: 0.01, ..Default::default() };
        for g in [3.0, -0.2] {
            let mut state = AdamState::new(&[1]);
            let mut p = [0.5];
            state.update(&mut [&mut p], &[&[g]], &cfg).unwrap();
            let expected = 0.5 - 0.01 * g / (g.abs() + 1e-8);
            assert!((p[0] - expected).abs() < 1e-15);
            assert!(((0.5 - p[0]).abs() - 0.01).abs() < 1e-8);
        }
    }

    #[test]
    fn non_finite_gradient_is_divergence() {
        let mut state = AdamState::new(&[1]);
        let mut p = [0.0];
        let err = state.update(&mut [&mut p], &[&[f64::NAN]], &AdamConfig::default()).unwrap_err();
        assert!(matches!(err, Error::TrainingDivergence { .. }));
        assert_eq!(state.step(), 0);
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let cfg = AdamConfig { lr: 0.0, ..Default::default() };
        let mut state = AdamState::new(&[2]);
        let mut p = [1.0, 2.0];
        state.update(&mut [&mut p], &[&[0.3, -4.0]], &cfg).unwrap();
        assert_eq!(p, [1.0, 2.0]);
    }
}
