//! Gaussian affinities with per-point bandwidths calibrated to a target
//! perplexity (`2^H` with the entropy in bits) by bisection.

use ganforge_core::Tensor;

use crate::error::{EmbedError, Result};

/// Symmetric joint affinities `p_ij = (p_{j|i} + p_{i|j}) / 2n` with zero
/// diagonal and unit total mass.
#[derive(Clone, Debug)]
pub struct AffinityMatrix {
    pub n: usize,
    /// Row-major `n x n`.
    pub p: Vec<f64>,
    pub perplexity: f64,
    pub sigmas: Vec<f64>,
    /// Conditional perplexity each row actually realized.
    pub realized: Vec<f64>,
    /// Rows whose calibration hit the search boundary without converging.
    pub flagged: Vec<bool>,
}

/// Conditional distribution over the other points for squared distances
/// `d2` at precision `beta = 1/(2 sigma^2)`; returns the perplexity in
/// bits alongside.
fn row_distribution(d2: &[f64], beta: f64, out: &mut [f64]) -> f64 {
    let min_d2 = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (o, &d) in out.iter_mut().zip(d2) {
        let w = (-beta * (d - min_d2)).exp();
        *o = w;
        sum += w;
    }
    let mut h_nats = 0.0;
    for o in out.iter_mut() {
        *o /= sum;
        if *o > 0.0 {
            h_nats -= *o * o.ln();
        }
    }
    (h_nats / std::f64::consts::LN_2).exp2()
}

/// Bisection on sigma so the realized conditional perplexity matches
/// `target` within `tol`. Returns `(sigma, flagged)`; `flagged` marks an
/// unreachable target (the boundary sigma is returned).
pub fn perplexity_calibration(d2_row: &[f64], target: f64, tol: f64, max_iters: usize) -> Result<(f64, bool)> {
    if target < 1.0 {
        return Err(EmbedError::Invalid(format!("perplexity target must be >= 1, got {target}")));
    }
    if d2_row.iter().any(|&d| d < 0.0 || !d.is_finite()) {
        return Err(EmbedError::Invalid("distance row must hold finite nonnegative values".into()));
    }
    if !d2_row.iter().any(|&d| d > 0.0) {
        return Err(EmbedError::Invalid("at least one positive distance is required".into()));
    }
    let mut scratch = vec![0.0; d2_row.len()];
    let mut beta = 1.0;
    let mut beta_lo = 0.0_f64;
    let mut beta_hi = f64::INFINITY;
    let mut perp = row_distribution(d2_row, beta, &mut scratch);
    let mut converged = (perp - target).abs() <= tol;
    for _ in 0..max_iters {
        if converged {
            break;
        }
        if perp > target {
            // Too spread out: sharpen.
            beta_lo = beta;
            beta = if beta_hi.is_finite() { 0.5 * (beta + beta_hi) } else { beta * 2.0 };
        } else {
            beta_hi = beta;
            beta = 0.5 * (beta + beta_lo);
        }
        perp = row_distribution(d2_row, beta, &mut scratch);
        converged = (perp - target).abs() <= tol;
    }
    let sigma = (1.0 / (2.0 * beta.max(1e-300))).sqrt();
    Ok((sigma, !converged))
}

/// Build the symmetric affinity matrix for `N x D` data.
pub fn affinity_matrix(x: &Tensor, perplexity: f64, tol: f64, max_iters: usize) -> Result<AffinityMatrix> {
    let (n, d) = x.dims2().map_err(EmbedError::Tensor)?;
    if n < 2 {
        return Err(EmbedError::Invalid("affinities need at least 2 points".into()));
    }
    if perplexity >= n as f64 {
        return Err(EmbedError::Invalid(format!(
            "perplexity {perplexity} must be below the point count {n}"
        )));
    }
    let data = x.data();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dist: f64 = data[i * d..(i + 1) * d]
                .iter()
                .zip(&data[j * d..(j + 1) * d])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d2[i * n + j] = dist;
            d2[j * n + i] = dist;
        }
    }
    let mut cond = vec![0.0; n * n];
    let mut sigmas = Vec::with_capacity(n);
    let mut realized = Vec::with_capacity(n);
    let mut flagged = Vec::with_capacity(n);
    let mut row_d2 = vec![0.0; n - 1];
    let mut row_p = vec![0.0; n - 1];
    for i in 0..n {
        let mut w = 0;
        for j in 0..n {
            if j != i {
                row_d2[w] = d2[i * n + j];
                w += 1;
            }
        }
        let (sigma, flag) = perplexity_calibration(&row_d2, perplexity, tol, max_iters)?;
        let beta = 1.0 / (2.0 * sigma * sigma);
        let perp = row_distribution(&row_d2, beta, &mut row_p);
        let mut w = 0;
        for j in 0..n {
            if j != i {
                cond[i * n + j] = row_p[w];
                w += 1;
            }
        }
        sigmas.push(sigma);
        realized.push(perp);
        flagged.push(flag);
    }
    let mut p = vec![0.0; n * n];
    let scale = 1.0 / (2.0 * n as f64);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) * scale;
            }
        }
    }
    Ok(AffinityMatrix { n, p, perplexity, sigmas, realized, flagged })
}

impl AffinityMatrix {
    /// Assert symmetry, zero diagonal, unit mass, and (for unflagged rows)
    /// realized conditional perplexity within `perp_tol` of the target.
    pub fn validate(&self, perp_tol: f64) -> Result<()> {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            if self.p[i * n + i] != 0.0 {
                return Err(EmbedError::Invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = self.p[i * n + j];
                if v < 0.0 {
                    return Err(EmbedError::Invalid(format!("negative affinity at ({i},{j})")));
                }
                if (v - self.p[j * n + i]).abs() > 1e-12 {
                    return Err(EmbedError::Invalid(format!("asymmetry at ({i},{j})")));
                }
                total += v;
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(EmbedError::Invalid(format!("total mass {total}, expected 1")));
        }
        for i in 0..n {
            if !self.flagged[i] && (self.realized[i] - self.perplexity).abs() > perp_tol {
                return Err(EmbedError::Invalid(format!(
                    "row {i} realized perplexity {} vs target {}",
                    self.realized[i], self.perplexity
                )));
            }
        }
        Ok(())
    }
}
