//! Diffusion noise schedule and forward noising.

use crate::error::{ModelError, Result};
use strata_core::{Scalar, Tensor};

/// Linear-beta schedule with cached cumulative products.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    pub timesteps: usize,
    pub betas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    pub fn linear(timesteps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if timesteps == 0 {
            return Err(ModelError::Schedule("zero timesteps".into()));
        }
        let betas: Vec<f64> = (0..timesteps)
            .map(|t| {
                if timesteps == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * t as f64 / (timesteps - 1) as f64
                }
            })
            .collect();
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = Vec::with_capacity(timesteps);
        let mut prod = 1.0;
        for a in &alphas {
            prod *= a;
            alpha_bar.push(prod);
        }
        let s = Self {
            timesteps,
            betas,
            alphas,
            alpha_bar,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (t, &b) in self.betas.iter().enumerate() {
            if !(0.0 < b && b < 1.0) {
                return Err(ModelError::Schedule(format!("beta[{t}] = {b} outside (0, 1)")));
            }
        }
        for t in 1..self.timesteps {
            if self.alpha_bar[t] >= self.alpha_bar[t - 1] {
                return Err(ModelError::Schedule(format!(
                    "alpha_bar not strictly decreasing at t = {t}"
                )));
            }
        }
        if self.alpha_bar[0] < 0.99 {
            return Err(ModelError::Schedule(format!(
                "alpha_bar[0] = {} is far from 1",
                self.alpha_bar[0]
            )));
        }
        Ok(())
    }

    /// Posterior variance of the reverse step at t.
    pub fn posterior_variance(&self, t: usize) -> f64 {
        if t == 0 {
            return 0.0;
        }
        (1.0 - self.alpha_bar[t - 1]) / (1.0 - self.alpha_bar[t]) * self.betas[t]
    }
}

/// The forward noising identity with an explicit mixing coefficient:
/// `sqrt(a) * x0 + sqrt(1 - a) * eps`. At `a = 1` the result is exactly
/// `x0`; at `a = 0` it is exactly `eps`.
pub fn q_sample_with<T: Scalar>(x0: &Tensor<T>, eps: &Tensor<T>, alpha_bar: f64) -> Tensor<T> {
    debug_assert_eq!(x0.shape(), eps.shape());
    let sa = T::cast(alpha_bar.sqrt());
    let sb = T::cast((1.0 - alpha_bar).sqrt());
    Tensor::from_fn(x0.shape(), |i| sa * x0.data()[i] + sb * eps.data()[i])
}

/// Forward noising at schedule step `t`.
pub fn q_sample<T: Scalar>(
    x0: &Tensor<T>,
    t: usize,
    eps: &Tensor<T>,
    schedule: &NoiseSchedule,
) -> Result<Tensor<T>> {
    if t >= schedule.timesteps {
        return Err(ModelError::Schedule(format!(
            "timestep {t} out of range [0, {})",
            schedule.timesteps
        )));
    }
    if x0.shape() != eps.shape() {
        return Err(ModelError::Shape(format!(
            "x0 {:?} vs eps {:?}",
            x0.shape(),
            eps.shape()
        )));
    }
    Ok(q_sample_with(x0, eps, schedule.alpha_bar[t]))
}

/// Host-side sinusoidal embedding of the timestep index.
pub fn time_embedding(t: usize, dim: usize) -> Tensor<f32> {
    let half = dim / 2;
    let mut data = vec![0f32; dim];
    for k in 0..half {
        let exponent = if half > 1 { k as f64 / (half - 1) as f64 } else { 0.0 };
        let omega = (-(10_000f64.ln()) * exponent).exp();
        let phase = t as f64 * omega;
        data[2 * k] = phase.sin() as f32;
        data[2 * k + 1] = phase.cos() as f32;
    }
    Tensor::new(&[dim], data).expect("layout")
}
