//! The combined metric report, serializable as JSON and one-row CSV.

use ganforge_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{MetricError, Result};
use crate::features::FeatureSet;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricReport {
    pub is_mean: f64,
    pub is_std: f64,
    pub fid: f64,
    pub kid_mean: f64,
    pub kid_std: f64,
    pub precision: f64,
    pub recall: f64,
    pub extractor_id: String,
    pub n_real: usize,
    pub n_fake: usize,
}

impl MetricReport {
    pub fn validate(&self) -> Result<()> {
        if self.is_mean < 1.0 - 1e-9 {
            return Err(MetricError::Validation(format!("is_mean {} below 1", self.is_mean)));
        }
        if self.fid < -1e-9 {
            return Err(MetricError::Validation(format!("fid {} below 0", self.fid)));
        }
        for (name, v) in [("precision", self.precision), ("recall", self.recall)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(MetricError::Validation(format!("{name} {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        format!(
            "is_mean,is_std,fid,kid_mean,kid_std,precision,recall,extractor_id,n_real,n_fake\n{},{},{},{},{},{},{},{},{},{}\n",
            self.is_mean,
            self.is_std,
            self.fid,
            self.kid_mean,
            self.kid_std,
            self.precision,
            self.recall,
            self.extractor_id,
            self.n_real,
            self.n_fake
        )
    }
}

/// Estimator knobs for a combined report. Subset sizes and neighbor
/// counts shrink automatically when the sets are smaller than the
/// published defaults.
#[derive(Clone, Copy, Debug)]
pub struct ReportParams {
    pub kid_subset: usize,
    pub kid_subsets: usize,
    pub pr_k: usize,
    pub is_splits: usize,
    pub seed: u64,
}

impl Default for ReportParams {
    fn default() -> Self {
        ReportParams { kid_subset: 50, kid_subsets: 100, pr_k: 3, is_splits: 10, seed: 0 }
    }
}

/// Assemble every metric into one report. `fake_probs` are per-sample
/// class posteriors when a classifier is available; without one the
/// posterior is uniform, so the score degenerates to its floor of 1.
pub fn compute_report(
    real: &FeatureSet,
    fake: &FeatureSet,
    fake_probs: Option<&Tensor>,
    params: &ReportParams,
) -> Result<MetricReport> {
    let (is_mean, is_std) = match fake_probs {
        Some(p) => {
            let n = p.dims2().map_err(MetricError::Tensor)?.0;
            crate::is_score::inception_score(p, params.is_splits.min(n).max(1))?
        }
        None => (1.0, 0.0),
    };
    let fid = crate::fid::fid(real, fake)?;
    let subset = params.kid_subset.min(real.len()).min(fake.len()).max(2);
    let (kid_mean, kid_std) = crate::kid::kid(real, fake, subset, params.kid_subsets, params.seed)?;
    let k = params.pr_k.min(real.len().min(fake.len()) - 1).max(1);
    let (precision, recall) = crate::pr::precision_recall(real, fake, k)?;
    let report = MetricReport {
        is_mean,
        is_std,
        fid,
        kid_mean,
        kid_std,
        precision,
        recall,
        extractor_id: real.extractor_id.clone(),
        n_real: real.len(),
        n_fake: fake.len(),
    };
    report.validate()?;
    Ok(report)
}
