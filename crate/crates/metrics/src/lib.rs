//! Fidelity/diversity metrics over pluggable feature extractors, plus the
//! pass/fail quality gate that admits synthetic samples into downstream
//! training.

pub mod curve;
pub mod features;
pub mod fid;
pub mod gate;
pub mod is_score;
pub mod kid;
pub mod pr;
pub mod report;

mod error;

pub use curve::{real_fake_curve, real_fake_point};
pub use error::{MetricError, Result};
pub use features::{extract_features, FeatureExtractor, FeatureSet, RandomProjection, RawPixels, Source};
pub use fid::fid;
pub use gate::{quality_gate, GateOutcome, GateThresholds};
pub use is_score::inception_score;
pub use kid::kid;
pub use pr::precision_recall;
pub use report::{compute_report, MetricReport, ReportParams};
