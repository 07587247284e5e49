//! Two-dimensional embeddings of feature sets: PCA for global variance,
//! t-SNE for local neighborhood structure, with CSV/SVG scatter export.

pub mod affinity;
pub mod export;
pub mod pca;
pub mod tsne;

mod error;

pub use affinity::{affinity_matrix, perplexity_calibration, AffinityMatrix};
pub use error::{EmbedError, Result};
pub use export::{export_scatter, read_layout_csv, EmbeddingLayout, PointSource};
pub use pca::{pca, Pca};
pub use tsne::{kl_and_gradient, tsne, TsneConfig, TsneResult};
