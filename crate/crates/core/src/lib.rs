//! Dense tensor arithmetic with reverse-mode automatic differentiation.
//!
//! Everything is 64-bit floats in row-major order. The [`Tape`] records
//! eagerly-evaluated primitive operations; gradients are built by pushing
//! more operations onto the same tape, so backward passes are themselves
//! differentiable (needed for gradient-penalty objectives).

pub mod check;
pub mod composites;
pub mod conv;
pub mod gft;
pub mod linalg;
pub mod rng;
pub mod tape;
pub mod tensor;

mod error;

pub use check::{grad_check, grad_check_sampled};
pub use composites::{ActKind, BnMode, RunningStats};
pub use error::{Result, TensorError};
pub use rng::{derive_seed, Rng};
pub use tape::{Gradients, NodeId, Tape};
pub use tensor::Tensor;
