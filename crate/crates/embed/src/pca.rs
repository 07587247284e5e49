//! Principal component analysis with deterministic component signs.

use ganforge_core::linalg::{matmul, sym_eigen};
use ganforge_core::Tensor;

use crate::error::{EmbedError, Result};

#[derive(Clone, Debug)]
pub struct Pca {
    /// `N x out_dims` projected coordinates.
    pub projection: Tensor,
    /// `out_dims x D` component rows, each sign-fixed so its
    /// largest-magnitude entry is positive.
    pub components: Tensor,
    /// Fraction of total variance captured per component, descending.
    pub explained_variance_ratios: Vec<f64>,
    pub mean: Vec<f64>,
}

impl Pca {
    /// Map projected points back into the original (centered + mean) space.
    pub fn back_project(&self, proj: &Tensor) -> Result<Tensor> {
        let (n, k) = proj.dims2().map_err(EmbedError::Tensor)?;
        let (kc, d) = self.components.dims2().map_err(EmbedError::Tensor)?;
        if k != kc {
            return Err(EmbedError::Invalid(format!("projection has {k} dims, components {kc}")));
        }
        let mut out = matmul(proj.data(), self.components.data(), n, k, d);
        for row in out.chunks_exact_mut(d) {
            for (v, m) in row.iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        Ok(Tensor::new(vec![n, d], out).map_err(EmbedError::Tensor)?)
    }
}

/// Project `N x D` data onto the top `out_dims` eigenvectors of the sample
/// covariance. Requires `out_dims <= min(N-1, D)`.
pub fn pca(x: &Tensor, out_dims: usize) -> Result<Pca> {
    let (n, d) = x.dims2().map_err(EmbedError::Tensor)?;
    if n < 2 {
        return Err(EmbedError::Invalid(format!("PCA needs at least 2 samples, got {n}")));
    }
    let cap = (n - 1).min(d);
    if out_dims == 0 || out_dims > cap {
        return Err(EmbedError::Invalid(format!(
            "out_dims must lie in 1..={cap} for {n} samples of dimension {d}, got {out_dims}"
        )));
    }
    let data = x.data();
    let mut mean = vec![0.0; d];
    for row in data.chunks_exact(d) {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v / n as f64;
        }
    }
    let mut centered = vec![0.0; n * d];
    for (r, row) in data.chunks_exact(d).enumerate() {
        for (c, (&v, m)) in row.iter().zip(&mean).enumerate() {
            centered[r * d + c] = v - m;
        }
    }
    // Sample covariance, 1/(N-1).
    let mut cov = vec![0.0; d * d];
    for row in centered.chunks_exact(d) {
        for i in 0..d {
            if row[i] == 0.0 {
                continue;
            }
            for j in i..d {
                cov[i * d + j] += row[i] * row[j];
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
    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let (vals, vecs) = sym_eigen(&cov, d);
    let mut components = vec![0.0; out_dims * d];
    let mut ratios = Vec::with_capacity(out_dims);
    for e in 0..out_dims {
        let v = &vecs[e * d..(e + 1) * d];
        // Deterministic orientation: largest-magnitude entry positive.
        let lead = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let flip = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for (c, &vv) in v.iter().enumerate() {
            components[e * d + c] = flip * vv;
        }
        ratios.push(if trace > 0.0 { (vals[e].max(0.0)) / trace } else { 0.0 });
    }
    // projection = centered @ components^T
    let mut ct = vec![0.0; d * out_dims];
    for e in 0..out_dims {
        for c in 0..d {
            ct[c * out_dims + e] = components[e * d + c];
        }
    }
    let proj = matmul(&centered, &ct, n, d, out_dims);
    Ok(Pca {
        projection: Tensor::new(vec![n, out_dims], proj).map_err(EmbedError::Tensor)?,
        components: Tensor::new(vec![out_dims, d], components).map_err(EmbedError::Tensor)?,
        explained_variance_ratios: ratios,
        mean,
    })
}
