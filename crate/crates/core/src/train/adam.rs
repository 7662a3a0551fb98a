//! Adam with the standard default settings and bias correction.

use std::collections::BTreeMap;

use crate::nets::ParameterStore;
use crate::tensor::{Scalar, Tensor};

pub struct Adam<T: Scalar> {
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
    t: u64,
    moment1: BTreeMap<String, Vec<T>>,
    moment2: BTreeMap<String, Vec<T>>,
}

impl<T: Scalar> Default for Adam<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Adam<T> {
    /// Defaults: alpha 1e-3, beta1 0.9, beta2 0.999, eps 1e-8.
    pub fn new() -> Self {
        Adam {
            lr: T::from_f64(1e-3),
            beta1: T::from_f64(0.9),
            beta2: T::from_f64(0.999),
            eps: T::from_f64(1e-8),
            t: 0,
            moment1: BTreeMap::new(),
            moment2: BTreeMap::new(),
        }
    }

    pub fn with_learning_rate(lr: f64) -> Self {
        let mut adam = Self::new();
        adam.lr = T::from_f64(lr);
        adam
    }

    /// One bias-corrected update. Parameters without a gradient this step
    /// are left untouched (their moments do not decay either).
    pub fn step(&mut self, params: &mut ParameterStore<T>, grads: &BTreeMap<String, Vec<T>>) {
        self.t += 1;
        let t = self.t as i32;
        let c1 = T::one() - self.beta1.powi(t);
        let c2 = T::one() - self.beta2.powi(t);
        for (name, grad) in grads {
            let current = params.get(name);
            let n = current.numel();
            assert_eq!(grad.len(), n, "gradient size mismatch for `{name}`");
            let m = self.moment1.entry(name.clone()).or_insert_with(|| vec![T::zero(); n]);
            let v = self.moment2.entry(name.clone()).or_insert_with(|| vec![T::zero(); n]);
            let mut updated = current.data().to_vec();
            for i in 0..n {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (T::one() - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (T::one() - self.beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                updated[i] = updated[i] - self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            let shape = current.shape().to_vec();
            params.set(name, Tensor::from_vec(shape, updated));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{EmbedderKind, ModelConfig, PoolingKind};

    fn tiny_store() -> ParameterStore<f64> {
        let config = ModelConfig::small(EmbedderKind::Gcn, PoolingKind::MaxPool);
        ParameterStore::init(&config, 3, 9)
    }

    #[test]
    fn first_step_is_sign_scaled() {
        // with zero state, m_hat = g and v_hat = g^2, so the step is
        // -lr * g / (|g| + eps): approximately -lr * sign(g)
        let mut params = tiny_store();
        let name = "gcn.r1.w";
        let before = params.get(name).data().to_vec();
        let grad = vec![0.37; before.len()];
        let mut adam: Adam<f64> = Adam::new();
        let mut grads = BTreeMap::new();
        grads.insert(name.to_string(), grad);
        adam.step(&mut params, &grads);
        let after = params.get(name).data();
        for (b, a) in before.iter().zip(after) {
            assert!((b - a - 1e-3).abs() < 1e-9, "step should be ~ -lr * sign(g)");
        }
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut params = tiny_store();
        let name = "gcn.r1.w";
        let before = params.get(name).data().to_vec();
        let mut adam: Adam<f64> = Adam::new();
        let mut grads = BTreeMap::new();
        grads.insert(name.to_string(), vec![0.0; before.len()]);
        adam.step(&mut params, &grads);
        assert_eq!(params.get(name).data(), &before[..]);
    }

    #[test]
    fn deterministic_across_runs() {
        let run = || {
            let mut params = tiny_store();
            let mut adam: Adam<f64> = Adam::new();
            for step in 0..5 {
                let mut grads = BTreeMap::new();
                let n = params.get("gcn.r2.w").numel();
                grads.insert(
                    "gcn.r2.w".to_string(),
                    (0..n).map(|i| ((i + step) as f64 * 0.01).sin()).collect(),
                );
                adam.step(&mut params, &grads);
            }
            params.get("gcn.r2.w").data().to_vec()
        };
        assert_eq!(run(), run());
    }
}
