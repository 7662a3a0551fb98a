//! Forward-pass context: mode, parameter view, batch-norm statistics
//! collection, and the shared layer helpers.

use std::cell::RefCell;

use crate::tensor::{ops, Scalar, Tensor, TensorError};

use super::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch norm uses current-batch statistics and records them for
    /// running-average updates.
    Train,
    /// Batch norm uses frozen running statistics.
    Eval,
}

/// Context threaded through one forward pass.
pub struct Forward<'a, T: Scalar> {
    pub params: &'a Params<T>,
    pub mode: Mode,
    bn_stats: RefCell<Vec<(String, Vec<T>, Vec<T>)>>,
}

pub(crate) const BN_EPS: f64 = 1e-5;
pub(crate) const LN_EPS: f64 = 1e-5;

impl<'a, T: Scalar> Forward<'a, T> {
    pub fn new(params: &'a Params<T>, mode: Mode) -> Self {
        Forward {
            params,
            mode,
            bn_stats: RefCell::new(Vec::new()),
        }
    }

    pub fn get(&self, name: &str) -> &Tensor<T> {
        self.params.get(name)
    }

    /// Collected (site, batch mean, batch variance) triples from this pass.
    pub fn take_bn_stats(&self) -> Vec<(String, Vec<T>, Vec<T>)> {
        self.bn_stats.take()
    }

    /// Batch normalization over the row axis at a named site.
    pub fn batch_norm(&self, prefix: &str, x: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        let gamma = self.get(&format!("{prefix}.gamma"));
        let beta = self.get(&format!("{prefix}.beta"));
        let eps = T::from_f64(BN_EPS);
        match self.mode {
            Mode::Train => {
                let (y, mean, var) = ops::batch_norm_train(x, gamma, beta, eps)?;
                self.bn_stats.borrow_mut().push((prefix.to_string(), mean, var));
                Ok(y)
            }
            Mode::Eval => {
                let mean = self.get(&format!("{prefix}.running_mean")).data().to_vec();
                let var = self.get(&format!("{prefix}.running_var")).data().to_vec();
                ops::batch_norm_eval(x, gamma, beta, &mean, &var, eps)
            }
        }
    }

    /// Layer normalization with the site's own scale and shift.
    pub fn layer_norm(&self, prefix: &str, x: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        let gamma = self.get(&format!("{prefix}.gamma"));
        let beta = self.get(&format!("{prefix}.beta"));
        ops::layer_norm(x, gamma, beta, T::from_f64(LN_EPS))
    }

    /// One-hidden-layer feed-forward over row-stacked inputs `[n, in]`:
    /// linear, batch norm + ReLU, linear, ReLU.
    pub(crate) fn feed_forward_rows(
        &self,
        prefix: &str,
        x: &Tensor<T>,
    ) -> Result<Tensor<T>, TensorError> {
        let h = ops::matmul(x, self.get(&format!("{prefix}.w1")))?;
        let h = ops::add_bias(&h, self.get(&format!("{prefix}.b1")))?;
        let h = self.batch_norm(&format!("{prefix}.bn"), &h)?;
        let h = ops::relu(&h);
        let out = ops::matmul(&h, self.get(&format!("{prefix}.w2")))?;
        let out = ops::add_bias(&out, self.get(&format!("{prefix}.b2")))?;
        Ok(ops::relu(&out))
    }

    /// Sums a set of equal-shape vectors in content-sorted order, so the
    /// result cannot depend on how the set was enumerated. An empty set is
    /// the zero vector of the given width.
    pub fn sum_canonical(
        &self,
        mut parts: Vec<Tensor<T>>,
        width: usize,
    ) -> Result<Tensor<T>, TensorError> {
        if parts.is_empty() {
            return Ok(Tensor::zeros(vec![width]));
        }
        parts.sort_by(|a, b| a.content_cmp(b));
        let mut acc = parts[0].clone();
        for p in &parts[1..] {
            acc = ops::add(&acc, p)?;
        }
        Ok(acc)
    }
}
