//! Adversarial training of the DCGAN-family generator/discriminator pair,
//! with gradient-penalty and spectral-normalization stabilizers, sample
//! generation, and `.gfc` checkpointing.

pub mod adam;
pub mod builders;
pub mod checkpoint;
pub mod generate;
pub mod gp;
pub mod losses;
pub mod mosaic;
pub mod network;
pub mod sn;
pub mod train;

mod error;

pub use adam::{adam_step, AdamParams, AdamState, Optimizer};
pub use builders::{build_discriminator, build_generator};
pub use error::{GanError, Result};
pub use generate::generate;
pub use gp::gradient_penalty;
pub use network::{Bound, Layer, Network, NetworkKind, SnSetting};
pub use sn::spectral_normalize;
pub use train::{train, LossMode, TrainConfig, TrainHistory, TrainOutputs, TrainResult};
