//! Inception-style score over class-posterior rows.

use ganforge_core::Tensor;

use crate::error::{MetricError, Result};

/// `exp(mean_i KL(p(y|x_i) || p_hat))` per split, with `p_hat` the split
/// marginal; returns the mean and population standard deviation over
/// `n_splits` contiguous splits.
pub fn inception_score(probs: &Tensor, n_splits: usize) -> Result<(f64, f64)> {
    let (n, c) = probs.dims2().map_err(MetricError::Tensor)?;
    if n_splits == 0 {
        return Err(MetricError::Invalid("n_splits must be at least 1".into()));
    }
    if n < n_splits {
        return Err(MetricError::Invalid(format!("{n} rows cannot fill {n_splits} splits")));
    }
    let data = probs.data();
    for (i, row) in data.chunks_exact(c).enumerate() {
        let mut sum = 0.0;
        for &p in row {
            if p < 0.0 || !p.is_finite() {
                return Err(MetricError::Validation(format!("row {i} has invalid probability {p}")));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-6 {
            return Err(MetricError::Validation(format!("row {i} sums to {sum}, not 1")));
        }
    }
    let mut scores = Vec::with_capacity(n_splits);
    let base = n / n_splits;
    let extra = n % n_splits;
    let mut start = 0usize;
    for s in 0..n_splits {
        let len = base + usize::from(s < extra);
        let rows = &data[start * c..(start + len) * c];
        start += len;
        let mut marginal = vec![0.0; c];
        for row in rows.chunks_exact(c) {
            for (m, &p) in marginal.iter_mut().zip(row) {
                *m += p / len as f64;
            }
        }
        let mut mean_kl = 0.0;
        for row in rows.chunks_exact(c) {
            let mut kl = 0.0;
            for (&p, &q) in row.iter().zip(&marginal) {
                if p > 0.0 {
                    kl += p * (p.ln() - q.ln());
                }
            }
            mean_kl += kl / len as f64;
        }
        scores.push(mean_kl.exp());
    }
    let mean = scores.iter().sum::<f64>() / n_splits as f64;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n_splits as f64;
    Ok((mean, var.sqrt()))
}
