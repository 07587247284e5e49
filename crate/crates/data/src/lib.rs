//! Dataset ingestion and preprocessing: PNM (and optionally PNG) decoding,
//! bicubic resampling to 64x64, deterministic stratified splits, dataset
//! caching in the GFT1 container, and procedural toy datasets.

pub mod cache;
pub mod dataset;
pub mod loader;
pub mod pnm;
pub mod resize;
pub mod split;
pub mod toy;

#[cfg(feature = "png")]
pub mod pngdec;

mod error;

pub use dataset::{Dataset, SampleSource, SplitTag};
pub use error::{DataError, Result};
pub use split::SplitSpec;

/// Canonical image side length for the whole pipeline.
pub const IMAGE_SIDE: usize = 64;
