use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major array with an optional gradient buffer of the same shape.
///
/// A tensor with an empty shape is a scalar holding one value.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S> {
    shape: Vec<usize>,
    data: Vec<S>,
    grad: Option<Vec<S>>,
}

impl<S: Scalar> Tensor<S> {
    pub fn new(shape: Vec<usize>, data: Vec<S>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::BadTensor {
                shape,
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            shape,
            data,
            grad: None,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![S::zero(); len],
            grad: None,
        }
    }

    pub fn full(shape: Vec<usize>, value: S) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![value; len],
            grad: None,
        }
    }

    pub fn scalar(value: S) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
            grad: None,
        }
    }

    /// One-dimensional tensor.
    pub fn vector(data: Vec<S>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
            grad: None,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn from_f64(shape: Vec<usize>, data: &[f64]) -> Result<Self> {
        Self::new(shape, data.iter().map(|&v| S::lit(v)).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    /// Mutable access to the values. Used by optimizers to apply steps in place.
    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1 && self.shape.iter().all(|&d| d == 1)
    }

    /// The single value of a scalar tensor.
    pub fn item(&self) -> Result<S> {
        if self.is_scalar() {
            Ok(self.data[0])
        } else {
            Err(Error::invalid(format!(
                "item() on tensor of shape {:?}",
                self.shape
            )))
        }
    }

    /// `(rows, cols)` of a 2-D tensor.
    pub fn dims2(&self) -> Option<(usize, usize)> {
        match self.shape[..] {
            [r, c] => Some((r, c)),
            _ => None,
        }
    }

    pub fn grad(&self) -> Option<&[S]> {
        self.grad.as_deref()
    }

    pub fn set_grad(&mut self, grad: Vec<S>) -> Result<()> {
        if grad.len() != self.data.len() {
            return Err(Error::ShapeMismatch {
                primitive: "set_grad",
                left: self.shape.clone(),
                right: vec![grad.len()],
            });
        }
        self.grad = Some(grad);
        Ok(())
    }

    pub fn take_grad(&mut self) -> Option<Vec<S>> {
        self.grad.take()
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Same shape, values replaced.
    pub fn with_data(&self, data: Vec<S>) -> Result<Self> {
        Self::new(self.shape.clone(), data)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.shape.clone())
    }
}
