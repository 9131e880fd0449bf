//! Reverse-mode automatic differentiation over dense tensors.
//!
//! A [`Tape`] records primitives as they are evaluated; one call to
//! [`Tape::backward`] then fills in gradients for every recorded value.

pub mod gradcheck;
mod init;
mod tape;
mod tensor;

pub use init::{kaiming_bound, kaiming_uniform, KAIMING_A};
pub use tape::{Tape, Var};
pub use tensor::Tensor;
