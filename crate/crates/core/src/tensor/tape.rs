//! The differentiation tape: a topologically ordered record of primitive
//! applications, replayed in reverse by `backward`.

use std::cell::RefCell;
use std::rc::Rc;

use super::{Scalar, Tensor, TensorError};

pub(crate) type BackwardFn<T> = Box<dyn Fn(&[T]) -> Vec<Vec<T>>>;

struct Entry<T: Scalar> {
    /// Tape ids of the tracked inputs; the backward closure returns one
    /// gradient buffer per listed input, in order.
    inputs: Vec<usize>,
    back: BackwardFn<T>,
}

struct TapeInner<T: Scalar> {
    entries: Vec<Entry<T>>,
    grads: Option<Vec<Option<Vec<T>>>>,
}

/// Reverse-mode tape. Single-threaded; distinct tapes are independent.
pub struct Tape<T: Scalar> {
    inner: Rc<RefCell<TapeInner<T>>>,
}

impl<T: Scalar> Clone for Tape<T> {
    fn clone(&self) -> Self {
        Tape {
            inner: Rc::clone(&self.inner),
        }
    }
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            inner: Rc::new(RefCell::new(TapeInner {
                entries: Vec::new(),
                grads: None,
            })),
        }
    }

    pub(crate) fn same_tape(&self, other: &Tape<T>) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }

    pub(crate) fn record(&self, inputs: Vec<usize>, back: BackwardFn<T>) -> usize {
        let mut inner = self.inner.borrow_mut();
        let id = inner.entries.len();
        inner.entries.push(Entry { inputs, back });
        id
    }

    /// Registers `tensor` as a leaf whose gradient will be materialized.
    pub fn watch(&self, tensor: &Tensor<T>) -> Tensor<T> {
        let id = self.record(vec![], Box::new(|_| vec![]));
        Tensor::from_parts(
            tensor.shape().to_vec(),
            tensor.data().to_vec(),
            Some((self.clone(), id)),
        )
    }

    /// Runs the reverse pass from a scalar loss, populating gradients for
    /// every tracked tensor. A second call without a fresh tape fails with
    /// `TapeConsumed`.
    pub fn backward(&self, loss: &Tensor<T>) -> Result<(), TensorError> {
        let loss_id = match &loss.node {
            Some((tape, id)) if tape.same_tape(self) => *id,
            _ => return Err(TensorError::NotOnTape),
        };
        if !loss.is_scalar() {
            return Err(TensorError::NonScalarLoss {
                shape: loss.shape().to_vec(),
            });
        }
        let mut inner = self.inner.borrow_mut();
        if inner.grads.is_some() {
            return Err(TensorError::TapeConsumed);
        }
        let n = inner.entries.len();
        let mut grads: Vec<Option<Vec<T>>> = vec![None; n];
        grads[loss_id] = Some(vec![T::one()]);
        for id in (0..n).rev() {
            let Some(gout) = grads[id].clone() else { continue };
            let entry = &inner.entries[id];
            if entry.inputs.is_empty() {
                continue;
            }
            let contributions = (entry.back)(&gout);
            debug_assert_eq!(contributions.len(), entry.inputs.len());
            for (input, contrib) in entry.inputs.clone().into_iter().zip(contributions) {
                match &mut grads[input] {
                    Some(acc) => {
                        for (a, c) in acc.iter_mut().zip(contrib) {
                            *a += c;
                        }
                    }
                    slot => *slot = Some(contrib),
                }
            }
        }
        inner.grads = Some(grads);
        Ok(())
    }

    /// Gradient of a tracked tensor after `backward`. `None` when the tensor
    /// did not contribute to the loss (or is untracked).
    pub fn grad(&self, tensor: &Tensor<T>) -> Option<Tensor<T>> {
        let (tape, id) = tensor.node.as_ref()?;
        if !tape.same_tape(self) {
            return None;
        }
        let inner = self.inner.borrow();
        let grads = inner.grads.as_ref()?;
        grads[*id]
            .as_ref()
            .map(|g| Tensor::from_vec(tensor.shape().to_vec(), g.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ops;

    #[test]
    fn sum_gradient_is_ones() {
        let tape: Tape<f64> = Tape::new();
        let x = tape.watch(&Tensor::vector(vec![1.0, 2.0, 3.0]));
        let loss = ops::sum_all(&x);
        tape.backward(&loss).unwrap();
        assert_eq!(tape.grad(&x).unwrap().data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn sigmoid_dot_gradient_at_zero_weight() {
        // loss = sigmoid(w . x) with w = 0: dL/dw = 0.25 * x
        let tape: Tape<f64> = Tape::new();
        let w = tape.watch(&Tensor::vector(vec![0.0, 0.0]));
        let x = Tensor::vector(vec![0.4, -0.8]);
        let loss = ops::sigmoid(&ops::dot(&w, &x).unwrap());
        tape.backward(&loss).unwrap();
        let g = tape.grad(&w).unwrap();
        assert!((g.data()[0] - 0.1).abs() < 1e-12);
        assert!((g.data()[1] + 0.2).abs() < 1e-12);
    }

    #[test]
    fn second_backward_fails() {
        let tape: Tape<f64> = Tape::new();
        let x = tape.watch(&Tensor::scalar(2.0));
        let loss = ops::mul(&x, &x).unwrap();
        tape.backward(&loss).unwrap();
        assert!(matches!(tape.backward(&loss), Err(TensorError::TapeConsumed)));
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let tape: Tape<f64> = Tape::new();
        let x = tape.watch(&Tensor::vector(vec![1.0, 2.0]));
        assert!(matches!(
            tape.backward(&x),
            Err(TensorError::NonScalarLoss { .. })
        ));
    }

    #[test]
    fn reused_input_accumulates() {
        // loss = x*x: dL/dx = 2x
        let tape: Tape<f64> = Tape::new();
        let x = tape.watch(&Tensor::scalar(3.0));
        let loss = ops::mul(&x, &x).unwrap();
        tape.backward(&loss).unwrap();
        assert_eq!(tape.grad(&x).unwrap().item(), 6.0);
    }
}
