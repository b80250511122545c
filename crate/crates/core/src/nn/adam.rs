use super::params::ParamStore;
use crate::error::{contract, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    /// One bias-corrected update from the gradients of the last backward
    /// pass. Errors when no backward pass has run since the last step.
    pub fn step(&self, store: &mut ParamStore) -> Result<()> {
        if !store.take_grads_ready() {
            return Err(contract("adam step without gradients"));
        }
        store.adam_step += 1;
        let t = store.adam_step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for e in &mut store.entries {
            let (value, grad, m, v) = (e.value.data_mut(), e.grad.data(), e.m.data_mut(), e.v.data_mut());
            for i in 0..value.len() {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                value[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
