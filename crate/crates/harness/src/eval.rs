//! Classifier evaluation: accuracy, macro-F1, AUROC by the Mann-Whitney
//! statistic with tie correction, and sensitivity at a specificity floor.

use ganforge_data::Dataset;
use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    /// Absent when the task has no usable positive/negative partition.
    pub auroc: Option<f64>,
    pub sens_at_spec: Option<f64>,
    pub specificity_target: f64,
}

/// Mann-Whitney AUROC with average ranks over ties.
pub fn auroc_rank(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Average rank for the tie group (1-based ranks).
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    let rank_sum: f64 = ranks
        .iter()
        .zip(positive)
        .filter_map(|(r, &p)| p.then_some(*r))
        .sum();
    Some((rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos * n_neg) as f64)
}

/// Sensitivity at the most permissive threshold whose specificity still
/// meets `target`. Thresholds predict positive at `score >= t`; the
/// sentinel above the max score (specificity 1) always qualifies.
pub fn sensitivity_at_specificity(scores: &[f64], positive: &[bool], target: f64) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    let stats = |t: f64| -> (f64, f64) {
        let mut tp = 0usize;
        let mut tn = 0usize;
        for (&s, &p) in scores.iter().zip(positive) {
            if p && s >= t {
                tp += 1;
            }
            if !p && s < t {
                tn += 1;
            }
        }
        (tp as f64 / n_pos as f64, tn as f64 / n_neg as f64)
    };
    for &t in &thresholds {
        let (sens, spec) = stats(t);
        if spec >= target {
            return Some(sens);
        }
    }
    // Predict nothing positive: sensitivity 0 at specificity 1.
    Some(0.0)
}

fn macro_f1(preds: &[usize], labels: &[usize], n_classes: usize) -> f64 {
    let mut f1_sum = 0.0;
    for class in 0..n_classes {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (&p, &l) in preds.iter().zip(labels) {
            match (p == class, l == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        let denom = 2 * tp + fp + fn_;
        // Zero-support, zero-prediction classes contribute F1 = 0.
        if denom > 0 {
            f1_sum += 2.0 * tp as f64 / denom as f64;
        }
    }
    f1_sum / n_classes as f64
}

/// Evaluate a classifier on a labeled test set.
///
/// AUROC and sensitivity-at-specificity use the softmax score of
/// `positive_class` one-vs-rest; for binary tasks the positive class
/// defaults to 1, for multiclass tasks they are reported only when a
/// positive class is designated.
pub fn evaluate_classifier(
    model: &mut Classifier,
    test: &Dataset,
    positive_class: Option<usize>,
    specificity_target: f64,
) -> Result<EvalMetrics> {
    if test.is_empty() {
        return Err(HarnessError::Invalid("test set is empty".into()));
    }
    if !(0.0..=1.0).contains(&specificity_target) {
        return Err(HarnessError::Invalid(format!(
            "specificity target {specificity_target} outside [0, 1]"
        )));
    }
    let n_classes = test.n_classes();
    let probs = model.probs_value(&test.images)?;
    let (n, k) = probs.dims2().map_err(HarnessError::Tensor)?;
    if k != n_classes {
        return Err(HarnessError::Invalid(format!(
            "classifier emits {k} classes, dataset declares {n_classes}"
        )));
    }
    let preds: Vec<usize> = probs
        .data()
        .chunks_exact(k)
        .map(|row| {
            row.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                .map(|(i, _)| i)
                .unwrap()
        })
        .collect();
    let correct = preds.iter().zip(&test.labels).filter(|(p, l)| p == l).count();
    let accuracy = correct as f64 / n as f64;
    let f1 = macro_f1(&preds, &test.labels, n_classes);

    let pos_class = positive_class.or(if n_classes == 2 { Some(1) } else { None });
    let (auroc, sens) = match pos_class {
        Some(pc) if pc < n_classes => {
            let scores: Vec<f64> = probs.data().chunks_exact(k).map(|row| row[pc]).collect();
            let positive: Vec<bool> = test.labels.iter().map(|&l| l == pc).collect();
            (
                auroc_rank(&scores, &positive),
                sensitivity_at_specificity(&scores, &positive, specificity_target),
            )
        }
        Some(pc) => {
            return Err(HarnessError::Invalid(format!(
                "positive class {pc} outside {n_classes} classes"
            )))
        }
        None => (None, None),
    };
    Ok(EvalMetrics {
        accuracy,
        macro_f1: f1,
        auroc,
        sens_at_spec: sens,
        specificity_target,
    })
}
