//! Ordered collections of named tensors: trainable parameters and their gradients.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Trainable tensors in a fixed order. Gradients and per-element optimizer
/// buffers use the same type so that shapes line up by index.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet<S> {
    names: Vec<String>,
    tensors: Vec<Tensor<S>>,
}

impl<S: Scalar> Default for ParamSet<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> ParamSet<S> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor<S>) {
        self.names.push(name.into());
        self.tensors.push(tensor);
    }

    pub fn with(mut self, name: impl Into<String>, tensor: Tensor<S>) -> Self {
        self.push(name, tensor);
        self
    }

    /// A single one-dimensional parameter.
    pub fn from_vec(name: impl Into<String>, values: Vec<S>) -> Self {
        Self::new().with(name, Tensor::vector(values))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<S>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<S>] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<S>> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.tensors[i])
    }

    /// Total number of scalar values.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn iter_values(&self) -> impl Iterator<Item = &S> {
        self.tensors.iter().flat_map(|t| t.data().iter())
    }

    pub fn iter_values_mut(&mut self) -> impl Iterator<Item = &mut S> {
        self.tensors.iter_mut().flat_map(|t| t.data_mut().iter_mut())
    }

    pub fn to_flat(&self) -> Vec<S> {
        self.iter_values().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.iter_values().all(|v| v.is_finite())
    }

    pub fn zeros_like(&self) -> Self {
        self.map(|_| S::zero())
    }

    pub fn full_like(&self, value: S) -> Self {
        self.map(|_| value)
    }

    /// Same layout, every value transformed.
    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            names: self.names.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|t| {
                    t.with_data(t.data().iter().map(|&v| f(v)).collect())
                        .expect("same length")
                })
                .collect(),
        }
    }

    /// Same layout, values combined pairwise with `other`.
    pub fn zip_map(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        self.check_layout(other, "zip_map")?;
        Ok(Self {
            names: self.names.clone(),
            tensors: self
                .tensors
                .iter()
                .zip(&other.tensors)
                .map(|(a, b)| {
                    a.with_data(a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect())
                        .expect("same length")
                })
                .collect(),
        })
    }

    /// Inner product over every value, accumulated in parameter order.
    pub fn dot(&self, other: &Self) -> Result<S> {
        self.check_layout(other, "dot")?;
        Ok(self
            .iter_values()
            .zip(other.iter_values())
            .fold(S::zero(), |acc, (&a, &b)| acc + a * b))
    }

    pub fn max_abs(&self) -> S {
        self.iter_values().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    /// Errors unless `other` has the same tensor count and shapes.
    pub fn check_layout(&self, other: &Self, what: &'static str) -> Result<()> {
        if self.tensors.len() != other.tensors.len() {
            return Err(Error::ShapeMismatch {
                primitive: what,
                left: vec![self.tensors.len()],
                right: vec![other.tensors.len()],
            });
        }
        for (a, b) in self.tensors.iter().zip(&other.tensors) {
            if a.shape() != b.shape() {
                return Err(Error::ShapeMismatch {
                    primitive: what,
                    left: a.shape().to_vec(),
                    right: b.shape().to_vec(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_layout() {
        let a = ParamSet::from_vec("w", vec![1.0, 2.0]).with("b", Tensor::scalar(3.0));
        let b = a.map(|v| v * 2.0);
        assert_eq!(a.dot(&b).unwrap(), 28.0);
        assert_eq!(a.numel(), 3);
        let c = ParamSet::from_vec("w", vec![1.0]);
        assert!(a.dot(&c).is_err());
    }

    #[test]
    fn lookup_by_name() {
        let a = ParamSet::from_vec("w", vec![1.0f64]).with("b", Tensor::scalar(3.0));
        assert_eq!(a.get("b").unwrap().data(), &[3.0]);
        assert!(a.get("missing").is_none());
    }
}
