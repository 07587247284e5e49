//! Fréchet distance between Gaussian fits of two feature clouds.

use ganforge_core::linalg::{matmul, sym_eigen};

use crate::error::{MetricError, Result};
use crate::features::FeatureSet;

const EIG_CLIP: f64 = 1e-10;

/// Sample mean and covariance (1/(N-1) normalization) of an `N x D` set.
pub(crate) fn mean_cov(set: &FeatureSet) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (set.len(), set.dim());
    let data = set.features.data();
    let mut mean = vec![0.0; d];
    for row in data.chunks_exact(d) {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x / n as f64;
        }
    }
    let mut cov = vec![0.0; d * d];
    for row in data.chunks_exact(d) {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                cov[i * d + j] += di * (row[j] - mean[j]);
            }
        }
    }
    let norm = 1.0 / (n as f64 - 1.0);
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] * norm;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    (mean, cov)
}

/// Symmetric PSD square root via eigendecomposition, eigenvalues clipped
/// at zero (values below 1e-10 are treated as zero).
fn psd_sqrt(m: &[f64], d: usize) -> Vec<f64> {
    let (vals, vecs) = sym_eigen(m, d);
    let mut out = vec![0.0; d * d];
    for (e, &lam) in vals.iter().enumerate() {
        let lam = if lam < EIG_CLIP { 0.0 } else { lam };
        if lam == 0.0 {
            continue;
        }
        let s = lam.sqrt();
        let v = &vecs[e * d..(e + 1) * d];
        for i in 0..d {
            let si = s * v[i];
            for j in 0..d {
                out[i * d + j] += si * v[j];
            }
        }
    }
    out
}

/// Centered data matrix and the column means of a feature set.
fn centered(set: &FeatureSet) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (set.len(), set.dim());
    let data = set.features.data();
    let mut mean = vec![0.0; d];
    for row in data.chunks_exact(d) {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x / n as f64;
        }
    }
    let mut c = vec![0.0; n * d];
    for (r, row) in data.chunks_exact(d).enumerate() {
        for (j, (&x, m)) in row.iter().zip(&mean).enumerate() {
            c[r * d + j] = x - m;
        }
    }
    (c, mean)
}

/// `||mu_r - mu_f||^2 + Tr(S_r + S_f - 2 (S_r S_f)^{1/2})`, the trace term
/// routed through the symmetrized product `S_r^{1/2} S_f S_r^{1/2}`;
/// clamped to be nonnegative.
///
/// When the feature dimension exceeds the sample counts the trace term is
/// evaluated in sample space instead: the nonzero spectrum of `S_r S_f`
/// equals that of `(A B^T)(B A^T) / ((n-1)(m-1))` for centered data
/// matrices `A`, `B`, a symmetric PSD matrix of side `n`.
pub fn fid(real: &FeatureSet, fake: &FeatureSet) -> Result<f64> {
    if real.dim() != fake.dim() {
        return Err(MetricError::Invalid(format!(
            "feature dimensions differ: {} vs {}",
            real.dim(),
            fake.dim()
        )));
    }
    if real.len() < 2 || fake.len() < 2 {
        return Err(MetricError::Invalid("covariance needs at least 2 samples per set".into()));
    }
    let d = real.dim();
    let (n, m) = (real.len(), fake.len());
    if d <= n.max(m) {
        return fid_feature_space(real, fake);
    }

    let (a, mu_r) = centered(real);
    let (b, mu_f) = centered(fake);
    let mean_term: f64 = mu_r.iter().zip(&mu_f).map(|(x, y)| (x - y) * (x - y)).sum();
    let norm_r = 1.0 / (n as f64 - 1.0);
    let norm_f = 1.0 / (m as f64 - 1.0);
    let tr_r: f64 = a.iter().map(|x| x * x).sum::<f64>() * norm_r;
    let tr_f: f64 = b.iter().map(|x| x * x).sum::<f64>() * norm_f;
    // C = A B^T (n x m), M = C C^T (n x n).
    let mut bt = vec![0.0; d * m];
    for r in 0..m {
        for c in 0..d {
            bt[c * m + r] = b[r * d + c];
        }
    }
    let cmat = matmul(&a, &bt, n, d, m);
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let dot: f64 = cmat[i * m..(i + 1) * m]
                .iter()
                .zip(&cmat[j * m..(j + 1) * m])
                .map(|(x, y)| x * y)
                .sum();
            gram[i * n + j] = dot;
            gram[j * n + i] = dot;
        }
    }
    let (vals, _) = sym_eigen(&gram, n);
    let scale = norm_r * norm_f;
    let tr_sqrt: f64 = vals
        .iter()
        .map(|&l| {
            let l = l * scale;
            if l < EIG_CLIP {
                0.0
            } else {
                l.sqrt()
            }
        })
        .sum();
    Ok((mean_term + tr_r + tr_f - 2.0 * tr_sqrt).max(0.0))
}

fn fid_feature_space(real: &FeatureSet, fake: &FeatureSet) -> Result<f64> {
    let d = real.dim();
    let (mu_r, cov_r) = mean_cov(real);
    let (mu_f, cov_f) = mean_cov(fake);
    let mean_term: f64 = mu_r.iter().zip(&mu_f).map(|(a, b)| (a - b) * (a - b)).sum();
    let tr_r: f64 = (0..d).map(|i| cov_r[i * d + i]).sum();
    let tr_f: f64 = (0..d).map(|i| cov_f[i * d + i]).sum();
    let sqrt_r = psd_sqrt(&cov_r, d);
    let inner = matmul(&matmul(&sqrt_r, &cov_f, d, d, d), &sqrt_r, d, d, d);
    // Symmetrize away the matmul round-off before the second eigen pass.
    let mut sym = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            sym[i * d + j] = 0.5 * (inner[i * d + j] + inner[j * d + i]);
        }
    }
    let (vals, _) = sym_eigen(&sym, d);
    let tr_sqrt: f64 = vals
        .iter()
        .map(|&l| if l < EIG_CLIP { 0.0 } else { l.sqrt() })
        .sum();
    let raw = mean_term + tr_r + tr_f - 2.0 * tr_sqrt;
    Ok(raw.max(0.0))
}
