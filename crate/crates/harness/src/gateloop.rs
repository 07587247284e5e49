//! The bounded quality-gate refinement loop.
//!
//! Per-class generation is realized by training one GAN per class subset.
//! Each round generates a labeled synthetic pool, scores it against the
//! real training set, and either passes (retaining above-median-scored
//! samples per class as the filtered pool) or extends every class's
//! training before retrying, up to a round budget.

use std::path::{Path, PathBuf};

use ganforge_core::{derive_seed, BnMode, Tensor};
use ganforge_data::{Dataset, SampleSource, SplitTag};
use ganforge_gan::checkpoint::load_gan_checkpoint;
use ganforge_gan::train::{resume, TrainOutputs};
use ganforge_gan::{generate, train, SnSetting, TrainConfig};
use ganforge_metrics::{
    compute_report, extract_features, quality_gate, GateOutcome, GateThresholds, MetricReport,
    RandomProjection, ReportParams, Source,
};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug)]
pub struct GateLoopConfig {
    pub thresholds: GateThresholds,
    pub max_rounds: usize,
    /// Extra epochs of training per failed round.
    pub round_epochs: usize,
    pub pool_per_class: usize,
    /// Random-projection dimension for gate-time features.
    pub feature_dim: usize,
    pub report: ReportParams,
}

impl Default for GateLoopConfig {
    fn default() -> Self {
        GateLoopConfig {
            thresholds: GateThresholds::default(),
            max_rounds: 3,
            round_epochs: 20,
            pool_per_class: 64,
            feature_dim: 64,
            report: ReportParams::default(),
        }
    }
}

#[derive(Debug)]
pub struct GatedPool {
    pub full: Dataset,
    pub filtered: Dataset,
    pub rounds_used: usize,
    pub report: MetricReport,
}

/// Train one GAN per class subset; checkpoints land in
/// `dir/class_<id>/`. Returns the final checkpoint path per class.
pub fn train_per_class_gans(train_set: &Dataset, cfg: &TrainConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (class, idx) in train_set.class_indices().into_iter().enumerate() {
        if idx.is_empty() {
            return Err(HarnessError::Invalid(format!("class {class} has no training samples")));
        }
        let subset = train_set.subset(&idx, SplitTag::Train)?;
        let class_cfg = TrainConfig {
            seed: derive_seed(cfg.seed, &format!("per-class-gan/{class}")),
            batch_size: cfg.batch_size.min(subset.len()).max(2),
            ..cfg.clone()
        };
        let out = TrainOutputs { dir: dir.join(format!("class_{class}")) };
        let result = train(&class_cfg, &subset, Some(&out))?;
        let last = result
            .checkpoints
            .last()
            .cloned()
            .ok_or_else(|| HarnessError::Invalid("per-class training produced no checkpoint".into()))?;
        paths.push(last);
    }
    Ok(paths)
}

fn build_pool(checkpoints: &[PathBuf], channels: usize, class_names: &[String], per_class: usize, seed: u64, round: usize) -> Result<(Dataset, Vec<f64>)> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    for (class, path) in checkpoints.iter().enumerate() {
        let mut ckpt = load_gan_checkpoint(path)?;
        let batch = generate(
            &mut ckpt.generator,
            per_class,
            derive_seed(seed, &format!("pool/{class}/{round}")),
        )?;
        // Per-sample scores from this class's own discriminator (eval mode).
        let out = ckpt.discriminator.forward_value(&batch, BnMode::Eval, SnSetting::Off)?;
        scores.extend_from_slice(out.data());
        for s in 0..per_class {
            images.push(batch.slice_sample(s).map_err(HarnessError::Tensor)?);
            labels.push(class);
        }
        let _ = channels;
    }
    let tensor = Tensor::stack(&images).map_err(HarnessError::Tensor)?;
    let n = labels.len();
    let pool = Dataset::with_sources(
        tensor,
        labels,
        vec![SampleSource::Synthetic; n],
        class_names.to_vec(),
        SplitTag::Full,
        "synthetic:per-class-gan",
    )?;
    Ok((pool, scores))
}

/// Run the gate loop against already-trained per-class checkpoints,
/// extending their training on failure. Errors with `GateExhausted` when
/// the budget runs out.
pub fn gate_loop(
    real_train: &Dataset,
    checkpoints: &mut Vec<PathBuf>,
    gan_cfg: &TrainConfig,
    cfg: &GateLoopConfig,
    dir: &Path,
) -> Result<GatedPool> {
    if checkpoints.len() != real_train.n_classes() {
        return Err(HarnessError::Invalid(format!(
            "{} checkpoints for {} classes",
            checkpoints.len(),
            real_train.n_classes()
        )));
    }
    let extractor = RandomProjection { dim: cfg.feature_dim, seed: derive_seed(gan_cfg.seed, "gate-features") };
    let real_features = extract_features(&real_train.images, &extractor, Source::Real)?;
    let mut last_fail = (f64::INFINITY, 0.0);
    for round in 0..=cfg.max_rounds {
        let (pool, scores) = build_pool(
            checkpoints,
            real_train.channels(),
            &real_train.class_names,
            cfg.pool_per_class,
            gan_cfg.seed,
            round,
        )?;
        let fake_features = extract_features(&pool.images, &extractor, Source::Synthetic)?;
        let report = compute_report(&real_features, &fake_features, None, &cfg.report)?;
        match quality_gate(&scores, &report, &cfg.thresholds)? {
            GateOutcome::Pass { .. } => {
                // Median filtering per class: scores from different class
                // discriminators are not mutually comparable.
                let mut keep = Vec::new();
                for (class, idx) in pool.class_indices().into_iter().enumerate() {
                    let class_scores: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
                    let med = ganforge_metrics::gate::median(&class_scores);
                    keep.extend(idx.into_iter().filter(|&i| scores[i] >= med));
                    let _ = class;
                }
                keep.sort_unstable();
                let filtered = pool.subset(&keep, SplitTag::Full)?;
                return Ok(GatedPool { full: pool, filtered, rounds_used: round, report });
            }
            GateOutcome::Fail { fid, precision } => {
                last_fail = (fid, precision);
                if round == cfg.max_rounds {
                    break;
                }
                // Extend each class's training and replace the checkpoints.
                for (class, path) in checkpoints.iter_mut().enumerate() {
                    let ckpt = load_gan_checkpoint(path)?;
                    let out = TrainOutputs { dir: dir.join(format!("class_{class}")) };
                    let idx = real_train.class_indices()[class].clone();
                    let subset = real_train.subset(&idx, SplitTag::Train)?;
                    let result = resume(ckpt, &subset, cfg.round_epochs, Some(&out))?;
                    *path = result
                        .checkpoints
                        .last()
                        .cloned()
                        .ok_or_else(|| HarnessError::Invalid("resume produced no checkpoint".into()))?;
                }
            }
        }
    }
    Err(HarnessError::GateExhausted {
        rounds: cfg.max_rounds + 1,
        fid: last_fail.0,
        precision: last_fail.1,
    })
}
