//! Adam over [`ClassifierParams`].

use serde::{Deserialize, Serialize};

use crate::network::ClassifierParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates are shaped like the parameters they were created for; a
/// fresh optimizer is made after every head expansion.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(cfg: AdamConfig, params: &ClassifierParams) -> Self {
        let len = params.num_params();
        Self {
            cfg,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut ClassifierParams, grads: &ClassifierParams) {
        assert_eq!(
            params.num_params(),
            self.m.len(),
            "optimizer/parameter shape mismatch"
        );
        self.t += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        let mut idx = 0;
        for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
            for (x, gi) in p.iter_mut().zip(g) {
                let m = &mut self.m[idx];
                let v = &mut self.v[idx];
                *m = beta1 * *m + (1.0 - beta1) * gi;
                *v = beta2 * *v + (1.0 - beta2) * gi * gi;
                *x -= learning_rate * (*m / c1) / ((*v / c2).sqrt() + eps);
                idx += 1;
            }
        }
    }
}
