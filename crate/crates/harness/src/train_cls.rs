//! Classifier training with soft-label cross-entropy and best-epoch
//! selection by validation macro-F1.

use ganforge_core::{derive_seed, BnMode, Rng, Tape, Tensor};
use ganforge_data::Dataset;
use ganforge_gan::{AdamParams, Optimizer, SnSetting};
use serde::{Deserialize, Serialize};

use crate::classifier::{build_classifier, Classifier};
use crate::error::{HarnessError, Result};
use crate::eval::{evaluate_classifier, EvalMetrics};
use crate::policies::{apply_policy, one_hot, AugPolicy};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub width: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { epochs: 50, batch_size: 16, lr: 1e-3, width: crate::classifier::DEFAULT_WIDTH, seed: 0 }
    }
}

pub struct TrainedClassifier {
    pub classifier: Classifier,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub val_history: Vec<EvalMetrics>,
}

/// Soft-label cross-entropy node: `-mean_i sum_k y_ik log softmax(l)_ik`.
fn cross_entropy(tape: &mut Tape, logits: ganforge_core::NodeId, soft: &Tensor) -> Result<ganforge_core::NodeId> {
    let (n, k) = tape.value(logits).dims2().map_err(HarnessError::Tensor)?;
    // Row max as a constant; log-softmax is mathematically independent of it.
    let maxes: Vec<f64> = tape
        .value(logits)
        .data()
        .chunks_exact(k)
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let max_const = tape.constant(Tensor::from_vec(maxes));
    let max_b = tape.bcast_per_sample(max_const, &[n, k]).map_err(HarnessError::Tensor)?;
    let shifted = tape.sub(logits, max_b).map_err(HarnessError::Tensor)?;
    let exps = tape.exp(shifted);
    let z = tape.sum_per_sample(exps).map_err(HarnessError::Tensor)?;
    let logz = tape.log(z);
    let logz_b = tape.bcast_per_sample(logz, &[n, k]).map_err(HarnessError::Tensor)?;
    let logsm = tape.sub(shifted, logz_b).map_err(HarnessError::Tensor)?;
    let soft_id = tape.constant(soft.clone());
    let weighted = tape.mul(soft_id, logsm).map_err(HarnessError::Tensor)?;
    let total = tape.sum_all(weighted);
    let mean = tape.scale(total, -1.0 / n as f64);
    Ok(mean)
}

pub fn train_classifier(
    train: &Dataset,
    val: Option<&Dataset>,
    policy: &AugPolicy,
    cfg: &ClassifierConfig,
) -> Result<TrainedClassifier> {
    if train.is_empty() {
        return Err(HarnessError::Invalid("classifier training set is empty".into()));
    }
    policy.kind.validate()?;
    let n_classes = train.n_classes();
    let mut cls = build_classifier(train.channels(), n_classes, cfg.width)?;
    cls.init(derive_seed(cfg.seed, "classifier-init"));

    let mut best = cls.clone();
    let mut best_epoch = 0usize;
    let mut best_f1 = f64::NEG_INFINITY;
    let mut val_history = Vec::new();

    if let Some(v) = val {
        let m = evaluate_classifier(&mut cls, v, None, 0.9)?;
        best_f1 = m.macro_f1;
        val_history.push(m);
    }

    let hp = AdamParams { lr: cfg.lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 };
    let mut opt = Optimizer::new(hp);
    let batch = cfg.batch_size.clamp(2, train.len());
    let batches_per_epoch = (train.len() / batch).max(1);
    let mut shuffle_rng = Rng::new(derive_seed(cfg.seed, "classifier-shuffle"));

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        shuffle_rng.shuffle(&mut order);
        for b in 0..batches_per_epoch {
            let idx = &order[b * batch..(b + 1) * batch];
            let samples: Vec<Tensor> = idx
                .iter()
                .map(|&i| train.images.slice_sample(i))
                .collect::<std::result::Result<_, _>>()
                .map_err(HarnessError::Tensor)?;
            let images = Tensor::stack(&samples).map_err(HarnessError::Tensor)?;
            let labels: Vec<usize> = idx.iter().map(|&i| train.labels[i]).collect();
            let soft = one_hot(&labels, n_classes)?;
            let mut aug_rng = Rng::new(derive_seed(policy.seed, &format!("aug/{epoch}/{b}")));
            let (aug_images, aug_soft) = apply_policy(&images, &soft, &policy.kind, &mut aug_rng)?;

            let mut tape = Tape::new();
            let bound = cls.net.bind(&mut tape, true, SnSetting::Off)?;
            let x = tape.leaf(aug_images, false);
            let (logits, _) = cls.forward(&mut tape, &bound, x, BnMode::Train)?;
            let loss = cross_entropy(&mut tape, logits, &aug_soft)?;
            let loss_v = tape.value(loss).scalar_value().map_err(HarnessError::Tensor)?;
            if !loss_v.is_finite() {
                return Err(HarnessError::Invalid(format!(
                    "classifier loss became {loss_v} at epoch {epoch}, batch {b}"
                )));
            }
            let grads = tape.backward(loss).map_err(HarnessError::Tensor)?;
            let named = bound.named_grads(&grads);
            opt.step(&mut cls.net.params, &named)?;
        }
        if let Some(v) = val {
            let m = evaluate_classifier(&mut cls, v, None, 0.9)?;
            if m.macro_f1 > best_f1 {
                best_f1 = m.macro_f1;
                best = cls.clone();
                best_epoch = epoch;
            }
            val_history.push(m);
        } else {
            best = cls.clone();
            best_epoch = epoch;
        }
    }
    if val.is_none() {
        best_f1 = f64::NAN;
    }
    Ok(TrainedClassifier { classifier: best, best_epoch, best_val_f1: best_f1, val_history })
}
