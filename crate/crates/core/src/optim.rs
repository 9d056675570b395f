//! Adaptive-moment (Adam) parameter updates with bias correction.

use crate::error::{CoreError, Result};
use crate::params::ParamSet;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// First/second moment accumulators aligned with a [`ParamSet`]'s order.
pub struct AdamState<T> {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamSet<T>, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect(),
            v: params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update. `grads[i]` pairs with `params` entry `i`; `None` entries
    /// (parameters outside the current loss) are treated as zero gradient and
    /// skipped entirely, leaving their moments untouched.
    pub fn step(&mut self, params: &mut ParamSet<T>, grads: &[Option<Tensor<T>>]) -> Result<()> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(CoreError::OptimizerMismatch {
                state: self.m.len(),
                params: params.len(),
            });
        }
        for (i, g) in grads.iter().enumerate() {
            if let Some(g) = g {
                if !g.is_finite() {
                    return Err(CoreError::NonFiniteGradient {
                        name: params.names()[i].clone(),
                    });
                }
                if g.shape() != params.tensors()[i].shape() {
                    return Err(CoreError::BadBinding {
                        name: params.names()[i].clone(),
                        expected: params.tensors()[i].shape().to_vec(),
                        actual: g.shape().to_vec(),
                    });
                }
            }
        }

        self.step += 1;
        let b1 = T::cast(self.config.beta1);
        let b2 = T::cast(self.config.beta2);
        let one = T::one();
        let lr = T::cast(self.config.lr);
        let eps = T::cast(self.config.eps);
        let bc1 = T::cast(1.0 - self.config.beta1.powi(self.step as i32));
        let bc2 = T::cast(1.0 - self.config.beta2.powi(self.step as i32));

        for (i, g) in grads.iter().enumerate() {
            let Some(g) = g else { continue };
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let p = params.tensors_mut()[i].data_mut();
            for ((pv, mv), (vv, &gv)) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut().zip(g.data())) {
                *mv = b1 * *mv + (one - b1) * gv;
                *vv = b2 * *vv + (one - b2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv = *pv - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_param(value: f64) -> ParamSet<f64> {
        let mut p = ParamSet::new();
        p.insert("w", Tensor::scalar(value)).unwrap();
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut params = single_param(0.7);
        let mut state = AdamState::new(&params, AdamConfig::default());
        state
            .step(&mut params, &[Some(Tensor::scalar(0.0))])
            .unwrap();
        assert_eq!(params.get("w").unwrap().item(), 0.7);
    }

    #[test]
    fn first_step_magnitude_is_learning_rate() {
        // Fresh state, gradient 1.0: bias-corrected m_hat = v_hat = 1, so the
        // update is lr / (1 + eps) which is lr to well below 1e-9.
        let mut params = single_param(0.0);
        let cfg = AdamConfig::with_lr(1e-3);
        let mut state = AdamState::new(&params, cfg);
        state
            .step(&mut params, &[Some(Tensor::scalar(1.0))])
            .unwrap();
        let update = params.get("w").unwrap().item().abs();
        assert!((update - 1e-3).abs() < 1e-9, "update {update}");
    }

    #[test]
    fn constant_positive_gradient_decreases_parameter_monotonically() {
        let mut params = single_param(1.0);
        let mut state = AdamState::new(&params, AdamConfig::with_lr(1e-2));
        let mut prev = 1.0;
        for _ in 0..50 {
            state
                .step(&mut params, &[Some(Tensor::scalar(0.5))])
                .unwrap();
            let now = params.get("w").unwrap().item();
            assert!(now < prev, "{now} !< {prev}");
            prev = now;
        }
    }

    #[test]
    fn non_finite_gradient_is_rejected_with_parameter_name() {
        let mut params = single_param(0.0);
        let mut state = AdamState::new(&params, AdamConfig::default());
        let err = state
            .step(&mut params, &[Some(Tensor::scalar(f64::NAN))])
            .unwrap_err();
        match err {
            crate::error::CoreError::NonFiniteGradient { name } => assert_eq!(name, "w"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn step_count_increments() {
        let mut params = single_param(0.0);
        let mut state = AdamState::new(&params, AdamConfig::default());
        for expect in 1..=3 {
            state
                .step(&mut params, &[Some(Tensor::scalar(0.1))])
                .unwrap();
            assert_eq!(state.step_count(), expect);
        }
    }
}
