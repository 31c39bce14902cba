//! Adam optimizer over a transform's raw parameter vectors.

use crate::transforms::{TransformGrads, TransformParams};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

/// First/second moment estimates, aligned with the parameter vectors.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new_for(params: &TransformParams) -> AdamState {
        let m: Vec<Vec<f64>> = params.vectors().map(|p| vec![0.0; p.len()]).collect();
        let v = m.clone();
        AdamState { m, v, t: 0 }
    }

    /// One bias-corrected Adam update with step size `alpha`.
    pub fn step(&mut self, params: &mut TransformParams, grads: &TransformGrads, alpha: f64) {
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .vectors_mut()
            .zip(grads.vectors())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            debug_assert_eq!(p.len(), g.len());
            for k in 0..p.len() {
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g[k];
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                p[k] -= alpha * m_hat / (v_hat.sqrt() + EPSILON);
            }
        }
    }
}
