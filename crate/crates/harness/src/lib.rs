//! The downstream protocol: train a small CNN under real-only, classically
//! augmented, and GAN-augmented regimens; score accuracy, macro-F1, AUROC,
//! and sensitivity at fixed specificity; run ratio/filtering ablations and
//! the quality-gate refinement loop.

pub mod ablation;
pub mod classifier;
pub mod eval;
pub mod gateloop;
pub mod mix;
pub mod policies;
pub mod protocol;
pub mod train_cls;

mod error;

pub use classifier::{build_classifier, Classifier};
pub use error::{HarnessError, Result};
pub use eval::{evaluate_classifier, EvalMetrics};
pub use gateloop::{gate_loop, train_per_class_gans, GateLoopConfig, GatedPool};
pub use mix::mix_synthetic;
pub use policies::{apply_policy, one_hot, AugKind, AugPolicy};
pub use protocol::{run_protocol, ProtocolConfig, Regimen, RegimenResult};
pub use train_cls::{train_classifier, ClassifierConfig, TrainedClassifier};
