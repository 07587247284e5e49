//! Separable bicubic resampling with the Catmull-Rom kernel (a = -0.5)
//! and edge-clamped sampling. Output values are clamped to the input's
//! per-channel range so resampling never escapes `[-1, 1]` data.

use ganforge_core::Tensor;

use crate::error::{DataError, Result};

/// Cubic convolution weight for offset `t`, a = -0.5.
fn cubic_weight(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (A + 2.0) * t * t * t - (A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        A * t * t * t - 5.0 * A * t * t + 8.0 * A * t - 4.0 * A
    } else {
        0.0
    }
}

/// Source coordinate of an output sample under center alignment.
fn src_coord(dst: usize, scale: f64) -> f64 {
    (dst as f64 + 0.5) * scale - 0.5
}

fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Resample one axis of a `rows x len_in` plane into `rows x len_out`.
fn resample_axis(src: &[f64], rows: usize, len_in: usize, len_out: usize, out: &mut Vec<f64>) {
    out.clear();
    if len_in == 1 {
        // Degenerate axis: nearest-neighbor fallback.
        for r in 0..rows {
            for _ in 0..len_out {
                out.push(src[r]);
            }
        }
        return;
    }
    let scale = len_in as f64 / len_out as f64;
    let mut taps = Vec::with_capacity(len_out);
    for j in 0..len_out {
        let x = src_coord(j, scale);
        let base = x.floor() as isize;
        let frac = x - base as f64;
        let w = [
            cubic_weight(frac + 1.0),
            cubic_weight(frac),
            cubic_weight(frac - 1.0),
            cubic_weight(frac - 2.0),
        ];
        let idx = [
            clamp_index(base - 1, len_in),
            clamp_index(base, len_in),
            clamp_index(base + 1, len_in),
            clamp_index(base + 2, len_in),
        ];
        taps.push((idx, w));
    }
    for r in 0..rows {
        let row = &src[r * len_in..(r + 1) * len_in];
        for (idx, w) in &taps {
            out.push(row[idx[0]] * w[0] + row[idx[1]] * w[1] + row[idx[2]] * w[2] + row[idx[3]] * w[3]);
        }
    }
}

/// Resize a `C x H x W` image to `C x out_h x out_w`.
pub fn resize_bicubic(image: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    let (c, h, w) = match image.shape() {
        &[c, h, w] => (c, h, w),
        s => return Err(DataError::Invalid(format!("resize expects C x H x W, got {s:?}"))),
    };
    if out_h == 0 || out_w == 0 {
        return Err(DataError::Invalid("resize target must be nonempty".into()));
    }
    if h == out_h && w == out_w {
        return Ok(image.clone());
    }
    let mut horiz = Vec::new();
    let mut full = Vec::new();
    let mut out = Vec::with_capacity(c * out_h * out_w);
    let mut transposed = vec![0.0; out_w.max(1) * h.max(1)];
    for ch in 0..c {
        let plane = &image.data()[ch * h * w..(ch + 1) * h * w];
        let lo = plane.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = plane.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Pass 1: width. Pass 2: height, on the transposed intermediate.
        resample_axis(plane, h, w, out_w, &mut horiz);
        transposed.resize(out_w * h, 0.0);
        for r in 0..h {
            for col in 0..out_w {
                transposed[col * h + r] = horiz[r * out_w + col];
            }
        }
        resample_axis(&transposed, out_w, h, out_h, &mut full);
        for r in 0..out_h {
            for col in 0..out_w {
                out.push(full[col * out_h + r].clamp(lo, hi));
            }
        }
    }
    Ok(Tensor::new(vec![c, out_h, out_w], out)?)
}

/// Direct 4x4 kernel-sum evaluation, kept as the reference oracle.
pub fn resize_bicubic_reference(image: &Tensor, out_h: usize, out_w: usize) -> Result<Tensor> {
    let (c, h, w) = match image.shape() {
        &[c, h, w] => (c, h, w),
        s => return Err(DataError::Invalid(format!("resize expects C x H x W, got {s:?}"))),
    };
    if h == out_h && w == out_w {
        return Ok(image.clone());
    }
    if h == 1 || w == 1 {
        return resize_bicubic(image, out_h, out_w);
    }
    let sy = h as f64 / out_h as f64;
    let sx = w as f64 / out_w as f64;
    let mut out = Vec::with_capacity(c * out_h * out_w);
    for ch in 0..c {
        let plane = &image.data()[ch * h * w..(ch + 1) * h * w];
        let lo = plane.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = plane.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for i in 0..out_h {
            let y = src_coord(i, sy);
            let by = y.floor() as isize;
            let fy = y - by as f64;
            for j in 0..out_w {
                let x = src_coord(j, sx);
                let bx = x.floor() as isize;
                let fx = x - bx as f64;
                let mut acc = 0.0;
                for u in -1isize..=2 {
                    let wy = cubic_weight(fy - u as f64);
                    let row = clamp_index(by + u, h);
                    for v in -1isize..=2 {
                        let wx = cubic_weight(fx - v as f64);
                        let col = clamp_index(bx + v, w);
                        acc += wy * wx * plane[row * w + col];
                    }
                }
                out.push(acc.clamp(lo, hi));
            }
        }
    }
    Ok(Tensor::new(vec![c, out_h, out_w], out)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_stays_constant() {
        let img = Tensor::full(&[1, 5, 7], 0.25);
        let out = resize_bicubic(&img, 64, 64).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.25).abs() < 1e-12));
    }

    #[test]
    fn identity_when_already_at_target() {
        let data: Vec<f64> = (0..64 * 64).map(|i| (i % 97) as f64 / 96.0).collect();
        let img = Tensor::new(vec![1, 64, 64], data).unwrap();
        let out = resize_bicubic(&img, 64, 64).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn ramp_upscale_matches_reference_oracle() {
        let data: Vec<f64> = (0..16).map(|i| i as f64 / 15.0).collect();
        let img = Tensor::new(vec![1, 4, 4], data).unwrap();
        let fast = resize_bicubic(&img, 8, 8).unwrap();
        let oracle = resize_bicubic_reference(&img, 8, 8).unwrap();
        for (a, b) in fast.data().iter().zip(oracle.data()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn single_pixel_axis_falls_back_to_nearest() {
        let img = Tensor::new(vec![1, 1, 3], vec![0.0, 0.5, 1.0]).unwrap();
        let out = resize_bicubic(&img, 2, 3).unwrap();
        assert_eq!(out.shape(), &[1, 2, 3]);
        assert_eq!(&out.data()[..3], &out.data()[3..]);
    }

    #[test]
    fn downscale_stays_within_input_range() {
        let data: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let img = Tensor::new(vec![1, 10, 10], data).unwrap();
        let out = resize_bicubic(&img, 4, 4).unwrap();
        assert!(out.data().iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}
