//! Minimal dense tensor library with a reverse-mode differentiation tape.
//!
//! Tensors are immutable value handles: cloning shares the underlying buffer.
//! An operation whose inputs are tracked on a [`Tape`] records a backward
//! closure; [`Tape::backward`] then populates gradients for every tracked
//! tensor. Precision is generic: `f32` for training runs, `f64` for the
//! gradient-check suites.

pub mod fd;
pub mod ops;
mod tape;

pub use fd::finite_difference;
pub use tape::Tape;

use std::cmp::Ordering;
use std::fmt;
use std::rc::Rc;

/// Element type of tensors: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float + num_traits::NumAssign + fmt::Debug + fmt::Display + Default + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn from_f32(x: f32) -> Self;
    fn to_f32(self) -> f32;
    /// IEEE total order, used for content-canonical aggregation.
    fn total_order(&self, other: &Self) -> Ordering;
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_f32(x: f32) -> Self {
        x
    }
    fn to_f32(self) -> f32 {
        self
    }
    fn total_order(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_f32(x: f32) -> Self {
        x as f64
    }
    fn to_f32(self) -> f32 {
        self as f32
    }
    fn total_order(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum TensorError {
    #[error("shape mismatch in `{op}`: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("tape already consumed by a previous backward pass")]
    TapeConsumed,
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("tensor is not tracked on this tape")]
    NotOnTape,
}

/// Dense multi-dimensional array, optionally tracked on a tape.
/// A scalar has the empty shape `[]`.
pub struct Tensor<T: Scalar> {
    shape: Vec<usize>,
    data: Rc<Vec<T>>,
    pub(crate) node: Option<(Tape<T>, usize)>,
}

impl<T: Scalar> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: Rc::clone(&self.data),
            node: self.node.clone(),
        }
    }
}

impl<T: Scalar> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .field("tracked", &self.node.is_some())
            .finish()
    }
}

impl<T: Scalar> Tensor<T> {
    pub fn from_vec(shape: Vec<usize>, data: Vec<T>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "data length must match shape"
        );
        Tensor {
            shape,
            data: Rc::new(data),
            node: None,
        }
    }

    pub fn scalar(value: T) -> Self {
        Tensor::from_vec(vec![], vec![value])
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor::from_vec(shape, vec![T::zero(); n])
    }

    pub fn vector(data: Vec<T>) -> Self {
        Tensor::from_vec(vec![data.len()], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn is_scalar(&self) -> bool {
        self.shape.is_empty()
    }

    /// Value of a scalar tensor.
    pub fn item(&self) -> T {
        assert!(self.is_scalar(), "item() requires a scalar, got {:?}", self.shape);
        self.data[0]
    }

    pub fn is_tracked(&self) -> bool {
        self.node.is_some()
    }

    /// Tape node id when tracked.
    pub fn tape_id(&self) -> Option<usize> {
        self.node.as_ref().map(|(_, id)| *id)
    }

    /// Detached copy sharing the same buffer.
    pub fn detach(&self) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            data: Rc::clone(&self.data),
            node: None,
        }
    }

    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<T>, node: Option<(Tape<T>, usize)>) -> Self {
        Tensor {
            shape,
            data: Rc::new(data),
            node,
        }
    }

    pub(crate) fn data_rc(&self) -> Rc<Vec<T>> {
        Rc::clone(&self.data)
    }

    /// Lexicographic IEEE total order on the flattened contents.
    pub fn content_cmp(&self, other: &Tensor<T>) -> Ordering {
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            match a.total_order(b) {
                Ordering::Equal => continue,
                non_eq => return non_eq,
            }
        }
        self.data.len().cmp(&other.data.len())
    }
}
