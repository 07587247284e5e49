//! Augmentation policies over image batches with soft labels.
//!
//! Geometric/photometric policies preserve labels; mixing policies emit
//! convex soft-label combinations. All randomness flows through the
//! caller-provided generator, so batches are reproducible.

use ganforge_core::{Rng, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugKind {
    None,
    Flip,
    Rotate { max_deg: f64 },
    Contrast { lo: f64, hi: f64 },
    Mixup { alpha: f64 },
    Cutout { size: usize },
    CutMix { alpha: f64 },
    AugMix { width: usize, depth: usize },
    Compose(Vec<AugKind>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugPolicy {
    pub kind: AugKind,
    pub seed: u64,
}

impl AugPolicy {
    pub fn none(seed: u64) -> Self {
        AugPolicy { kind: AugKind::None, seed }
    }

    /// The conventional flip/rotate/contrast stack.
    pub fn classical(seed: u64) -> Self {
        AugPolicy {
            kind: AugKind::Compose(vec![
                AugKind::Flip,
                AugKind::Rotate { max_deg: 15.0 },
                AugKind::Contrast { lo: 0.8, hi: 1.2 },
            ]),
            seed,
        }
    }
}

impl AugKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            AugKind::None | AugKind::Flip => Ok(()),
            AugKind::Rotate { max_deg } => {
                if !(0.0..=180.0).contains(max_deg) {
                    return Err(HarnessError::Invalid(format!("rotate max_deg {max_deg} outside [0, 180]")));
                }
                Ok(())
            }
            AugKind::Contrast { lo, hi } => {
                if !(*lo > 0.0 && lo <= hi) {
                    return Err(HarnessError::Invalid(format!("contrast range [{lo}, {hi}] invalid")));
                }
                Ok(())
            }
            AugKind::Mixup { alpha } | AugKind::CutMix { alpha } => {
                if *alpha <= 0.0 {
                    return Err(HarnessError::Invalid(format!("alpha must be positive, got {alpha}")));
                }
                Ok(())
            }
            AugKind::Cutout { size } => {
                if *size == 0 || *size > ganforge_data::IMAGE_SIDE {
                    return Err(HarnessError::Invalid(format!("cutout size {size} outside 1..=64")));
                }
                Ok(())
            }
            AugKind::AugMix { width, depth } => {
                if *width == 0 || *depth == 0 {
                    return Err(HarnessError::Invalid("augmix width and depth must be positive".into()));
                }
                Ok(())
            }
            AugKind::Compose(list) => {
                if list.is_empty() {
                    return Err(HarnessError::Invalid("compose list must be nonempty".into()));
                }
                list.iter().try_for_each(AugKind::validate)
            }
        }
    }
}

pub fn one_hot(labels: &[usize], n_classes: usize) -> Result<Tensor> {
    let mut data = vec![0.0; labels.len() * n_classes];
    for (i, &l) in labels.iter().enumerate() {
        if l >= n_classes {
            return Err(HarnessError::Invalid(format!("label {l} outside {n_classes} classes")));
        }
        data[i * n_classes + l] = 1.0;
    }
    Ok(Tensor::new(vec![labels.len(), n_classes], data).map_err(HarnessError::Tensor)?)
}

// ------------------------------------------------------------- sampling

/// Marsaglia-Tsang gamma sampler (with the alpha < 1 boost).
fn sample_gamma(rng: &mut Rng, alpha: f64) -> f64 {
    if alpha < 1.0 {
        let boost = rng.uniform().max(1e-300).powf(1.0 / alpha);
        return sample_gamma(rng, alpha + 1.0) * boost;
    }
    let d = alpha - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = rng.normal();
        let v = (1.0 + c * x).powi(3);
        if v <= 0.0 {
            continue;
        }
        let u = rng.uniform();
        if u < 1.0 - 0.0331 * x.powi(4) {
            return d * v;
        }
        if u.max(1e-300).ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

pub(crate) fn sample_beta(rng: &mut Rng, alpha: f64, beta: f64) -> f64 {
    let a = sample_gamma(rng, alpha);
    let b = sample_gamma(rng, beta);
    a / (a + b)
}

fn sample_dirichlet_uniform(rng: &mut Rng, k: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..k).map(|_| sample_gamma(rng, 1.0)).collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum.max(1e-300));
    w
}

// ----------------------------------------------------------- primitives

fn image_dims(images: &Tensor) -> Result<(usize, usize, usize, usize)> {
    Ok(images.dims4().map_err(HarnessError::Tensor)?)
}

fn flip_sample(data: &mut [f64], c: usize, h: usize, w: usize) {
    for ch in 0..c {
        for row in 0..h {
            let base = (ch * h + row) * w;
            data[base..base + w].reverse();
        }
    }
}

fn rotate_sample(src: &[f64], c: usize, h: usize, w: usize, deg: f64) -> Vec<f64> {
    let rad = deg.to_radians();
    let (sin, cos) = rad.sin_cos();
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let mut out = vec![-1.0; c * h * w];
    for ch in 0..c {
        let plane = &src[ch * h * w..(ch + 1) * h * w];
        for y in 0..h {
            for x in 0..w {
                // Inverse map with bilinear sampling; outside fills with -1.
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let sx = cos * dx + sin * dy + cx;
                let sy = -sin * dx + cos * dy + cy;
                if sx < 0.0 || sy < 0.0 || sx > (w - 1) as f64 || sy > (h - 1) as f64 {
                    continue;
                }
                let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
                let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
                let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
                let v = plane[y0 * w + x0] * (1.0 - fx) * (1.0 - fy)
                    + plane[y0 * w + x1] * fx * (1.0 - fy)
                    + plane[y1 * w + x0] * (1.0 - fx) * fy
                    + plane[y1 * w + x1] * fx * fy;
                out[(ch * h + y) * w + x] = v;
            }
        }
    }
    out
}

fn contrast_sample(data: &mut [f64], factor: f64) {
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    for v in data.iter_mut() {
        *v = (mean + (*v - mean) * factor).clamp(-1.0, 1.0);
    }
}

fn cutout_sample(data: &mut [f64], c: usize, h: usize, w: usize, top: usize, left: usize, size: usize) {
    for ch in 0..c {
        for row in top..top + size {
            let base = (ch * h + row) * w + left;
            data[base..base + size].fill(-1.0);
        }
    }
}

// ---------------------------------------------------------- application

/// Apply one policy step to a batch with soft labels. Label-preserving
/// policies return the labels untouched; mixing policies emit convex
/// combinations.
pub fn apply_policy(
    images: &Tensor,
    soft_labels: &Tensor,
    kind: &AugKind,
    rng: &mut Rng,
) -> Result<(Tensor, Tensor)> {
    kind.validate()?;
    let (n, c, h, w) = image_dims(images)?;
    let (ln, _k) = soft_labels.dims2().map_err(HarnessError::Tensor)?;
    if ln != n {
        return Err(HarnessError::Invalid(format!("{n} images but {ln} label rows")));
    }
    if n == 0 {
        return Err(HarnessError::Invalid("batch must be nonempty".into()));
    }
    let stride = c * h * w;
    match kind {
        AugKind::None => Ok((images.clone(), soft_labels.clone())),
        AugKind::Flip => {
            let mut out = images.data().to_vec();
            for s in 0..n {
                if rng.uniform() < 0.5 {
                    flip_sample(&mut out[s * stride..(s + 1) * stride], c, h, w);
                }
            }
            Ok((Tensor::new(images.shape().to_vec(), out).map_err(HarnessError::Tensor)?, soft_labels.clone()))
        }
        AugKind::Rotate { max_deg } => {
            let mut out = Vec::with_capacity(n * stride);
            for s in 0..n {
                let deg = rng.uniform_in(-max_deg, *max_deg);
                out.extend(rotate_sample(&images.data()[s * stride..(s + 1) * stride], c, h, w, deg));
            }
            Ok((Tensor::new(images.shape().to_vec(), out).map_err(HarnessError::Tensor)?, soft_labels.clone()))
        }
        AugKind::Contrast { lo, hi } => {
            let mut out = images.data().to_vec();
            for s in 0..n {
                let f = rng.uniform_in(*lo, *hi);
                contrast_sample(&mut out[s * stride..(s + 1) * stride], f);
            }
            Ok((Tensor::new(images.shape().to_vec(), out).map_err(HarnessError::Tensor)?, soft_labels.clone()))
        }
        AugKind::Cutout { size } => {
            let mut out = images.data().to_vec();
            for s in 0..n {
                let top = rng.below(h - size + 1);
                let left = rng.below(w - size + 1);
                cutout_sample(&mut out[s * stride..(s + 1) * stride], c, h, w, top, left, *size);
            }
            Ok((Tensor::new(images.shape().to_vec(), out).map_err(HarnessError::Tensor)?, soft_labels.clone()))
        }
        AugKind::Mixup { alpha } => {
            let lambda = sample_beta(rng, *alpha, *alpha);
            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            mix_batches(images, soft_labels, &perm, lambda)
        }
        AugKind::CutMix { alpha } => {
            let lambda = sample_beta(rng, *alpha, *alpha);
            let mut perm: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut perm);
            let ratio = (1.0 - lambda).sqrt();
            let box_h = ((h as f64 * ratio).round() as usize).min(h);
            let box_w = ((w as f64 * ratio).round() as usize).min(w);
            let cy = rng.below(h);
            let cx = rng.below(w);
            let y1 = cy.saturating_sub(box_h / 2);
            let y2 = (cy + box_h.div_ceil(2)).min(h);
            let x1 = cx.saturating_sub(box_w / 2);
            let x2 = (cx + box_w.div_ceil(2)).min(w);
            let area = (y2 - y1) * (x2 - x1);
            let lam_adj = 1.0 - area as f64 / (h * w) as f64;
            let mut out = images.data().to_vec();
            let src = images.data();
            for s in 0..n {
                let other = perm[s];
                for ch in 0..c {
                    for row in y1..y2 {
                        let dst_base = s * stride + (ch * h + row) * w;
                        let src_base = other * stride + (ch * h + row) * w;
                        out[dst_base + x1..dst_base + x2].copy_from_slice(&src[src_base + x1..src_base + x2]);
                    }
                }
            }
            let labels = mix_labels(soft_labels, &perm, lam_adj)?;
            Ok((Tensor::new(images.shape().to_vec(), out).map_err(HarnessError::Tensor)?, labels))
        }
        AugKind::AugMix { width, depth } => {
            let chain_ops = [
                AugKind::Flip,
                AugKind::Rotate { max_deg: 15.0 },
                AugKind::Contrast { lo: 0.8, hi: 1.2 },
            ];
            let mut out = Vec::with_capacity(n * stride);
            for s in 0..n {
                let sample = images.slice_sample(s).map_err(HarnessError::Tensor)?;
                let single = sample.reshape(&[1, c, h, w]).map_err(HarnessError::Tensor)?;
                let weights = sample_dirichlet_uniform(rng, *width);
                let mut mixed = vec![0.0; stride];
                let row = soft_labels.data()[s * soft_labels.shape()[1]..(s + 1) * soft_labels.shape()[1]].to_vec();
                let label_row = Tensor::new(vec![1, row.len()], row).map_err(HarnessError::Tensor)?;
                for &wk in &weights {
                    let mut chained = single.clone();
                    for _ in 0..*depth {
                        let op = &chain_ops[rng.below(chain_ops.len())];
                        chained = apply_policy(&chained, &label_row, op, rng)?.0;
                    }
                    for (m, v) in mixed.iter_mut().zip(chained.data()) {
                        *m += wk * v;
                    }
                }
                let blend = rng.uniform();
                for (m, &orig) in mixed.iter_mut().zip(single.data()) {
                    *m = (blend * orig + (1.0 - blend) * *m).clamp(-1.0, 1.0);
                }
                out.extend(mixed);
            }
            Ok((Tensor::new(images.shape().to_vec(), out).map_err(HarnessError::Tensor)?, soft_labels.clone()))
        }
        AugKind::Compose(list) => {
            let mut imgs = images.clone();
            let mut labels = soft_labels.clone();
            for k in list {
                let (i2, l2) = apply_policy(&imgs, &labels, k, rng)?;
                imgs = i2;
                labels = l2;
            }
            Ok((imgs, labels))
        }
    }
}

fn mix_batches(images: &Tensor, labels: &Tensor, perm: &[usize], lambda: f64) -> Result<(Tensor, Tensor)> {
    let n = images.shape()[0];
    let stride: usize = images.shape()[1..].iter().product();
    let src = images.data();
    let mut out = vec![0.0; n * stride];
    for s in 0..n {
        let other = perm[s];
        for i in 0..stride {
            out[s * stride + i] = lambda * src[s * stride + i] + (1.0 - lambda) * src[other * stride + i];
        }
    }
    let mixed_labels = mix_labels(labels, perm, lambda)?;
    Ok((Tensor::new(images.shape().to_vec(), out).map_err(HarnessError::Tensor)?, mixed_labels))
}

fn mix_labels(labels: &Tensor, perm: &[usize], lambda: f64) -> Result<Tensor> {
    let (n, k) = labels.dims2().map_err(HarnessError::Tensor)?;
    let src = labels.data();
    let mut out = vec![0.0; n * k];
    for s in 0..n {
        let other = perm[s];
        for i in 0..k {
            out[s * k + i] = lambda * src[s * k + i] + (1.0 - lambda) * src[other * k + i];
        }
    }
    Ok(Tensor::new(vec![n, k], out).map_err(HarnessError::Tensor)?)
}
