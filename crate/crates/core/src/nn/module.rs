//! Parameter containers and the visitor used by optimizers, checkpoints and
//! gradient checks.

use super::{Matrix, Real};

/// A trainable tensor and its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub value: Matrix<T>,
    pub grad: Matrix<T>,
}

impl<T: Real> Param<T> {
    pub fn new(value: Matrix<T>) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        Self { value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.as_mut_slice().iter_mut().for_each(|g| *g = T::zero());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    /// Updated by the optimizer.
    Param,
    /// State such as batch-norm running statistics.
    Buffer,
}

/// Anything owning named parameters and buffers. Visit order is fixed and
/// defines the layout of optimizer state and checkpoints.
pub trait Module<T: Real> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, TensorKind, &Matrix<T>));
    fn visit_params_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Param<T>));
    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut Matrix<T>));

    /// Number of trainable scalars.
    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, kind, m| {
            if kind == TensorKind::Param {
                n += m.as_slice().len();
            }
        });
        n
    }

    fn zero_grad(&mut self) {
        self.visit_params_mut("", &mut |_, p| p.zero_grad());
    }

    /// Flat copy of all parameter values in visit order.
    fn flat_params(&self) -> Vec<T> {
        let mut out = Vec::new();
        self.visit("", &mut |_, kind, m| {
            if kind == TensorKind::Param {
                out.extend_from_slice(m.as_slice());
            }
        });
        out
    }

    /// Flat copy of all parameter gradients in visit order.
    fn flat_grads(&mut self) -> Vec<T> {
        let mut out = Vec::new();
        self.visit_params_mut("", &mut |_, p| out.extend_from_slice(p.grad.as_slice()));
        out
    }

    /// Overwrites parameter values from a flat slice in visit order.
    fn set_flat_params(&mut self, values: &[T]) {
        let mut at = 0;
        self.visit_params_mut("", &mut |_, p| {
            let n = p.value.as_slice().len();
            p.value.as_mut_slice().copy_from_slice(&values[at..at + n]);
            at += n;
        });
        assert_eq!(at, values.len(), "flat parameter length mismatch");
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}
