//! Kernel distance: unbiased squared MMD with the cubic polynomial kernel
//! `k(x, y) = (x.y / D + 1)^3`, averaged over seeded subsets.

use ganforge_core::{derive_seed, Rng};

use crate::error::{MetricError, Result};
use crate::features::FeatureSet;

pub fn poly3_kernel(x: &[f64], y: &[f64]) -> f64 {
    let d = x.len() as f64;
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let base = dot / d + 1.0;
    base * base * base
}

/// Unbiased squared MMD between two equally sized index subsets.
pub(crate) fn unbiased_mmd2(real: &FeatureSet, fake: &FeatureSet, ri: &[usize], fi: &[usize]) -> f64 {
    let m = ri.len() as f64;
    let mut kxx = 0.0;
    let mut kyy = 0.0;
    let mut kxy = 0.0;
    for (a, &i) in ri.iter().enumerate() {
        for (b, &j) in ri.iter().enumerate() {
            if a != b {
                kxx += poly3_kernel(real.row(i), real.row(j));
            }
        }
    }
    for (a, &i) in fi.iter().enumerate() {
        for (b, &j) in fi.iter().enumerate() {
            if a != b {
                kyy += poly3_kernel(fake.row(i), fake.row(j));
            }
        }
    }
    for &i in ri {
        for &j in fi {
            kxy += poly3_kernel(real.row(i), fake.row(j));
        }
    }
    kxx / (m * (m - 1.0)) + kyy / (m * (m - 1.0)) - 2.0 * kxy / (m * m)
}

/// Mean and population standard deviation of the unbiased MMD^2 estimate
/// over `n_subsets` seeded subsets of `subset_size` points from each set.
pub fn kid(
    real: &FeatureSet,
    fake: &FeatureSet,
    subset_size: usize,
    n_subsets: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if real.dim() != fake.dim() {
        return Err(MetricError::Invalid(format!(
            "feature dimensions differ: {} vs {}",
            real.dim(),
            fake.dim()
        )));
    }
    if subset_size < 2 {
        return Err(MetricError::Invalid("subset_size must be at least 2".into()));
    }
    if subset_size > real.len() || subset_size > fake.len() {
        return Err(MetricError::Invalid(format!(
            "subset_size {subset_size} exceeds set sizes {}/{}",
            real.len(),
            fake.len()
        )));
    }
    if n_subsets == 0 {
        return Err(MetricError::Invalid("n_subsets must be at least 1".into()));
    }
    let mut estimates = Vec::with_capacity(n_subsets);
    for s in 0..n_subsets {
        let mut rng = Rng::new(derive_seed(seed, &format!("kid/subset/{s}")));
        let ri = rng.sample_indices(real.len(), subset_size);
        let fi = rng.sample_indices(fake.len(), subset_size);
        estimates.push(unbiased_mmd2(real, fake, &ri, &fi));
    }
    let mean = estimates.iter().sum::<f64>() / n_subsets as f64;
    let var = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n_subsets as f64;
    Ok((mean, var.sqrt()))
}
