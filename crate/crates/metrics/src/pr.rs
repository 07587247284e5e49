//! k-NN manifold precision/recall for generative models.
//!
//! Precision: fraction of fake points lying within some real point's
//! k-th-neighbor radius. Recall: the same with roles swapped. Radii of
//! zero (duplicate points) match only exact duplicates.

use crate::error::{MetricError, Result};
use crate::features::FeatureSet;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared radius to each point's k-th nearest neighbor within its own set.
fn knn_radii_sq(set: &FeatureSet, k: usize) -> Vec<f64> {
    let n = set.len();
    (0..n)
        .map(|i| {
            let mut dists: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| sq_dist(set.row(i), set.row(j)))
                .collect();
            let (_, kth, _) = dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
            *kth
        })
        .collect()
}

fn covered_fraction(points: &FeatureSet, manifold: &FeatureSet, radii_sq: &[f64]) -> f64 {
    let mut hit = 0usize;
    for i in 0..points.len() {
        let p = points.row(i);
        let inside = (0..manifold.len()).any(|j| sq_dist(p, manifold.row(j)) <= radii_sq[j]);
        if inside {
            hit += 1;
        }
    }
    hit as f64 / points.len() as f64
}

pub fn precision_recall(real: &FeatureSet, fake: &FeatureSet, k: usize) -> Result<(f64, f64)> {
    if real.dim() != fake.dim() {
        return Err(MetricError::Invalid(format!(
            "feature dimensions differ: {} vs {}",
            real.dim(),
            fake.dim()
        )));
    }
    if k == 0 || k >= real.len().min(fake.len()) {
        return Err(MetricError::Invalid(format!(
            "k must satisfy 1 <= k < min(N_real, N_fake) = {}",
            real.len().min(fake.len())
        )));
    }
    let real_radii = knn_radii_sq(real, k);
    let fake_radii = knn_radii_sq(fake, k);
    let precision = covered_fraction(fake, real, &real_radii);
    let recall = covered_fraction(real, fake, &fake_radii);
    Ok((precision, recall))
}
