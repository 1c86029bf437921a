//! Bias-corrected Adam over a flat parameter vector.
//!
//! The whole model lives in one `Vec<f64>`, so the optimizer needs no
//! per-tensor bookkeeping: one first-moment and one second-moment entry per
//! parameter, plus a shared step counter.

use crate::error::{Error, Result};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    fn validate(&self) -> Result<()> {
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::Config(format!("adam lr must be > 0, got {}", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("adam {name} must be in [0,1), got {b}")));
            }
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::Config(format!("adam eps must be > 0, got {}", self.eps)));
        }
        Ok(())
    }
}

/// Per-parameter moment estimates and the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    /// Fresh state for `len` parameters.
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    /// Number of updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one bias-corrected Adam update in place.
    ///
    /// `describe` names a parameter index for error messages, so a NaN
    /// gradient aborts with a message identifying the offending parameter.
    pub fn step(
        &mut self,
        cfg: &AdamConfig,
        params: &mut [f64],
        grads: &[f64],
        describe: impl Fn(usize) -> String,
    ) -> Result<()> {
        cfg.validate()?;
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::InvalidArgument(format!(
                "adam state holds {} parameters, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("gradient of {}", describe(i)),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        Ok(())
    }
}
