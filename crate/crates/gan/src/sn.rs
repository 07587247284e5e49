//! Spectral normalization by power iteration.

use ganforge_core::Tensor;

use crate::error::{GanError, Result};

const SIGMA_FLOOR: f64 = 1e-12;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Run `iters` power-iteration steps on a 2-D matrix starting from `u0`.
/// Returns the updated left vector, the matching right vector, and the
/// top-singular-value estimate `u^T W v`.
pub fn power_iterate(w: &Tensor, u0: &Tensor, iters: usize) -> Result<(Tensor, Tensor, f64)> {
    let (rows, cols) = w.dims2()?;
    if u0.elems() != rows {
        return Err(GanError::Invalid(format!(
            "power iteration u has {} entries, matrix has {rows} rows",
            u0.elems()
        )));
    }
    if iters == 0 {
        return Err(GanError::Invalid("n_power_iters must be at least 1".into()));
    }
    if norm(u0.data()) == 0.0 {
        return Err(GanError::Invalid("power iteration u must be nonzero".into()));
    }
    let wd = w.data();
    let mut u = u0.data().to_vec();
    let mut v = vec![0.0; cols];
    for _ in 0..iters {
        // v = W^T u, normalized.
        v.fill(0.0);
        for (r, &ur) in u.iter().enumerate() {
            if ur == 0.0 {
                continue;
            }
            for (vc, &wv) in v.iter_mut().zip(&wd[r * cols..(r + 1) * cols]) {
                *vc += ur * wv;
            }
        }
        let nv = norm(&v).max(SIGMA_FLOOR);
        v.iter_mut().for_each(|x| *x /= nv);
        // u = W v, normalized.
        for (r, ur) in u.iter_mut().enumerate() {
            *ur = wd[r * cols..(r + 1) * cols].iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let nu = norm(&u).max(SIGMA_FLOOR);
        u.iter_mut().for_each(|x| *x /= nu);
    }
    let mut sigma = 0.0;
    for (r, &ur) in u.iter().enumerate() {
        sigma += ur * wd[r * cols..(r + 1) * cols].iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok((Tensor::from_vec(u), Tensor::from_vec(v), sigma))
}

/// Divide a 2-D weight by its power-iteration top-singular-value estimate.
/// Returns `(weight / sigma, updated u, sigma)`; sigma is floored at 1e-12
/// so a zero matrix normalizes to zero.
pub fn spectral_normalize(weight: &Tensor, u: &Tensor, n_power_iters: usize) -> Result<(Tensor, Tensor, f64)> {
    let (u_new, _v, sigma) = power_iterate(weight, u, n_power_iters)?;
    let sigma_eff = sigma.max(SIGMA_FLOOR);
    let normalized = weight.map(|x| x / sigma_eff);
    Ok((normalized, u_new, sigma))
}

/// View a convolution kernel `Cout x Cin x k x k` as the `(Cout, Cin*k*k)`
/// matrix spectral normalization operates on.
pub fn conv_weight_as_matrix(w: &Tensor) -> Result<Tensor> {
    let (o, c, kh, kw) = w.dims4().map_err(GanError::Tensor)?;
    Ok(w.reshape(&[o, c * kh * kw]).map_err(GanError::Tensor)?)
}
