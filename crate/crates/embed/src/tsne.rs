//! t-SNE: Gaussian affinities in the input space matched against a
//! one-degree Student-t kernel in 2-D by gradient descent with momentum.
//!
//! The update follows `Y(t) = Y(t-1) - eta * dC/dY + alpha(t) (Y(t-1) -
//! Y(t-2))`, with early exaggeration on the affinities for the opening
//! iterations, and the returned layout is the lowest-KL iterate (so the
//! final KL never exceeds the initial one).

use ganforge_core::{Rng, Tensor};

use crate::affinity::{affinity_matrix, AffinityMatrix};
use crate::error::{EmbedError, Result};
use crate::pca::pca;

const Q_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iters: usize,
    pub eta: f64,
    pub momentum_early: f64,
    pub momentum_late: f64,
    pub momentum_switch: usize,
    /// Early-exaggeration factor and duration; `None` disables it.
    pub exaggeration: Option<(f64, usize)>,
    /// Input is PCA-reduced to at most this many dimensions first.
    pub pca_dims: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iters: 1000,
            eta: 200.0,
            momentum_early: 0.5,
            momentum_late: 0.8,
            momentum_switch: 250,
            exaggeration: Some((12.0, 250)),
            pca_dims: 50,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TsneResult {
    /// `N x 2` coordinates of the best (lowest-KL) iterate.
    pub y: Tensor,
    pub final_kl: f64,
    pub initial_kl: f64,
    pub affinities: AffinityMatrix,
}

/// Student-t pair weights `w_ij = 1 / (1 + ||y_i - y_j||^2)` and their sum.
fn student_weights(y: &[f64], n: usize, w: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = y[2 * i] - y[2 * j];
            let dy = y[2 * i + 1] - y[2 * j + 1];
            let wij = 1.0 / (1.0 + dx * dx + dy * dy);
            w[i * n + j] = wij;
            w[j * n + i] = wij;
            total += 2.0 * wij;
        }
    }
    total
}

/// KL divergence and its gradient for the given affinities and layout.
/// `grad_i = 4 sum_j (p_ij - q_ij)(y_i - y_j) w_ij`.
pub fn kl_and_gradient(p: &AffinityMatrix, y: &Tensor) -> Result<(f64, Tensor)> {
    let (n, two) = y.dims2().map_err(EmbedError::Tensor)?;
    if two != 2 || n != p.n {
        return Err(EmbedError::Invalid(format!(
            "layout must be {} x 2, got {:?}",
            p.n,
            y.shape()
        )));
    }
    let yd = y.data();
    let mut w = vec![0.0; n * n];
    let total = student_weights(yd, n, &mut w).max(Q_FLOOR);
    let mut kl = 0.0;
    let mut grad = vec![0.0; n * 2];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p.p[i * n + j];
            let wij = w[i * n + j];
            let qij = (wij / total).max(Q_FLOOR);
            if pij > 0.0 {
                kl += pij * (pij / qij).ln();
            }
            let coeff = 4.0 * (pij - qij) * wij;
            grad[2 * i] += coeff * (yd[2 * i] - yd[2 * j]);
            grad[2 * i + 1] += coeff * (yd[2 * i + 1] - yd[2 * j + 1]);
        }
    }
    Ok((kl, Tensor::new(vec![n, 2], grad).map_err(EmbedError::Tensor)?))
}

/// Run t-SNE on `N x D` data (PCA-reduced first).
pub fn tsne(x: &Tensor, cfg: &TsneConfig) -> Result<TsneResult> {
    let (n, d) = x.dims2().map_err(EmbedError::Tensor)?;
    if n < 4 {
        return Err(EmbedError::Invalid(format!("t-SNE needs at least 4 points, got {n}")));
    }
    if cfg.perplexity >= n as f64 {
        return Err(EmbedError::Invalid(format!(
            "perplexity {} must be below the point count {n}",
            cfg.perplexity
        )));
    }
    let reduced_dims = cfg.pca_dims.min(d).min(n - 1);
    let reduced;
    let input = if reduced_dims < d {
        reduced = pca(x, reduced_dims)?.projection;
        &reduced
    } else {
        x
    };
    let affinities = affinity_matrix(input, cfg.perplexity, 1e-5, 256)?;

    let mut rng = Rng::new(cfg.seed);
    let mut y: Vec<f64> = rng.normal_vec(n * 2, 0.0, 1e-2);
    let mut y_prev = y.clone();

    let mut exaggerated = affinities.clone();
    let (exag_factor, exag_until) = cfg.exaggeration.unwrap_or((1.0, 0));
    for v in exaggerated.p.iter_mut() {
        *v *= exag_factor;
    }

    let layout = |v: &[f64]| Tensor::new(vec![n, 2], v.to_vec()).unwrap();
    let (initial_kl, _) = kl_and_gradient(&affinities, &layout(&y))?;
    let mut best_kl = initial_kl;
    let mut best_y = y.clone();

    for t in 1..=cfg.iters {
        let active = if t <= exag_until { &exaggerated } else { &affinities };
        let (_, grad) = kl_and_gradient(active, &layout(&y))?;
        if grad.data().iter().any(|g| !g.is_finite()) {
            return Err(EmbedError::Diverged { iteration: t, reason: "non-finite gradient".into() });
        }
        let momentum = if t < cfg.momentum_switch { cfg.momentum_early } else { cfg.momentum_late };
        let mut y_next = vec![0.0; n * 2];
        for i in 0..n * 2 {
            y_next[i] = y[i] - cfg.eta * grad.data()[i] + momentum * (y[i] - y_prev[i]);
        }
        // Recenter; KL is translation invariant.
        let (mut cx, mut cy) = (0.0, 0.0);
        for pt in y_next.chunks_exact(2) {
            cx += pt[0] / n as f64;
            cy += pt[1] / n as f64;
        }
        for pt in y_next.chunks_exact_mut(2) {
            pt[0] -= cx;
            pt[1] -= cy;
        }
        y_prev = std::mem::replace(&mut y, y_next);
        let (kl, _) = kl_and_gradient(&affinities, &layout(&y))?;
        if kl < best_kl {
            best_kl = kl;
            best_y = y.clone();
        }
    }

    Ok(TsneResult {
        y: layout(&best_y),
        final_kl: best_kl,
        initial_kl,
        affinities,
    })
}
