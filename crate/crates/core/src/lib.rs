//! Differentiable self-adaptive learning rates, from the tape up.
//!
//! - [`autodiff`]: dense tensors and a reverse-mode tape.
//! - [`optim`]: DSA, hypergradient descent and eight classic update rules,
//!   plus the miss probe that measures how often an adapted rate does worse
//!   than the one it replaced.
//! - [`problems`]: the objectives the benchmarks minimize.
//! - [`data`]: tabular dataset loading, splitting and batching.
//! - [`metrics`]: accuracy / precision / recall / F1 and miss rates.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below name the double-precision instantiations.

pub mod autodiff;
pub mod data;
pub mod error;
pub mod metrics;
pub mod optim;
pub mod params;
pub mod problems;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use params::ParamSet;
pub use rng::{Rng, Stream};
pub use scalar::Scalar;

pub type Tensor64 = autodiff::Tensor<f64>;
pub type Tape64 = autodiff::Tape<f64>;
pub type ParamSet64 = ParamSet<f64>;
pub type Optimizer64 = optim::Optimizer<f64>;
pub type Batch64 = data::Batch<f64>;

pub type Tensor32 = autodiff::Tensor<f32>;
pub type Tape32 = autodiff::Tape<f32>;
pub type ParamSet32 = ParamSet<f32>;
pub type Optimizer32 = optim::Optimizer<f32>;
