//! Procedural toy datasets: stroke glyphs (three channels) and grayscale
//! lung-field plates. Both render at 64x64 in `[-1, 1]`, fully seeded,
//! with all variation scaled by a single `noise` knob.

use ganforge_core::{derive_seed, Rng, Tensor};

use crate::dataset::{Dataset, SplitTag};
use crate::error::{DataError, Result};
use crate::IMAGE_SIDE;

const SIDE: usize = IMAGE_SIDE;

#[derive(Clone, Copy)]
struct Seg {
    a: (f64, f64),
    b: (f64, f64),
}

fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Seg {
    Seg { a: (ax, ay), b: (bx, by) }
}

/// Approximate an arc by a short polyline.
fn arc(cx: f64, cy: f64, r: f64, from_deg: f64, to_deg: f64) -> Vec<Seg> {
    let steps = 24;
    let mut pts = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let t = from_deg + (to_deg - from_deg) * i as f64 / steps as f64;
        let rad = t.to_radians();
        pts.push((cx + r * rad.cos(), cy + r * rad.sin()));
    }
    pts.windows(2).map(|w| Seg { a: w[0], b: w[1] }).collect()
}

/// Stroke program per class, in unit coordinates.
fn glyph_strokes(class: usize) -> Vec<Seg> {
    match class {
        0 => vec![seg(0.5, 0.2, 0.5, 0.8)],
        1 => vec![seg(0.2, 0.5, 0.8, 0.5)],
        2 => vec![seg(0.25, 0.2, 0.75, 0.8)],
        3 => vec![seg(0.25, 0.2, 0.75, 0.8), seg(0.75, 0.2, 0.25, 0.8)],
        4 => arc(0.5, 0.5, 0.28, 0.0, 360.0),
        5 => arc(0.5, 0.55, 0.3, 180.0, 360.0),
        6 => vec![seg(0.3, 0.2, 0.3, 0.8), seg(0.3, 0.8, 0.75, 0.8)],
        7 => vec![seg(0.2, 0.25, 0.8, 0.25), seg(0.5, 0.25, 0.5, 0.8)],
        8 => vec![
            seg(0.28, 0.25, 0.72, 0.25),
            seg(0.72, 0.25, 0.72, 0.75),
            seg(0.72, 0.75, 0.28, 0.75),
            seg(0.28, 0.75, 0.28, 0.25),
        ],
        9 => {
            let mut s = arc(0.5, 0.36, 0.16, 90.0, 360.0);
            s.extend(arc(0.5, 0.66, 0.16, 270.0, 540.0));
            s
        }
        _ => unreachable!("glyph class out of range"),
    }
}

fn dist_to_seg(px: f64, py: f64, s: &Seg) -> f64 {
    let (ax, ay) = s.a;
    let (bx, by) = s.b;
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

fn render_strokes(strokes: &[Seg], width_px: f64) -> Vec<f64> {
    let mut plane = vec![-1.0; SIDE * SIDE];
    let scale = SIDE as f64;
    for (idx, v) in plane.iter_mut().enumerate() {
        let py = ((idx / SIDE) as f64 + 0.5) / scale;
        let px = ((idx % SIDE) as f64 + 0.5) / scale;
        let d = strokes
            .iter()
            .map(|s| dist_to_seg(px, py, s))
            .fold(f64::INFINITY, f64::min)
            * scale;
        // Signed coverage with a one-pixel soft edge.
        *v = ((width_px - d) / 1.0).clamp(-1.0, 1.0);
    }
    plane
}

fn jitter_strokes(strokes: &[Seg], rng: &mut Rng, amount: f64) -> Vec<Seg> {
    strokes
        .iter()
        .map(|s| Seg {
            a: (s.a.0 + rng.normal_scaled(0.0, amount), s.a.1 + rng.normal_scaled(0.0, amount)),
            b: (s.b.0 + rng.normal_scaled(0.0, amount), s.b.1 + rng.normal_scaled(0.0, amount)),
        })
        .collect()
}

/// Three-channel handwriting-like glyph dataset.
pub fn synth_glyphs(n_classes: usize, per_class: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n_classes == 0 || n_classes > 10 {
        return Err(DataError::Invalid(format!("glyphs support 1..=10 classes, got {n_classes}")));
    }
    if per_class == 0 {
        return Err(DataError::Invalid("per_class must be at least 1".into()));
    }
    if !(0.0..=4.0).contains(&noise) {
        return Err(DataError::Invalid(format!("noise must lie in [0, 4], got {noise}")));
    }
    let n = n_classes * per_class;
    let mut data = Vec::with_capacity(n * 3 * SIDE * SIDE);
    let mut labels = Vec::with_capacity(n);
    for class in 0..n_classes {
        let base = glyph_strokes(class);
        for item in 0..per_class {
            let mut rng = Rng::new(derive_seed(seed, &format!("glyph/{class}/{item}")));
            let strokes = jitter_strokes(&base, &mut rng, 0.035 * noise);
            let width = (2.2 + rng.normal_scaled(0.0, 0.8) * noise).max(0.8);
            let plane = render_strokes(&strokes, width);
            for _ in 0..3 {
                data.extend_from_slice(&plane);
            }
            labels.push(class);
        }
    }
    let images = Tensor::new(vec![n, 3, SIDE, SIDE], data).map_err(DataError::Tensor)?;
    let class_names = (0..n_classes).map(|c| format!("glyph_{c}")).collect();
    Dataset::new(images, labels, class_names, SplitTag::Full, format!("toy:glyphs(noise={noise},seed={seed})"))
}

fn gaussian_bump(plane: &mut [f64], cx: f64, cy: f64, sigma_px: f64, amp: f64) {
    let scale = SIDE as f64;
    for (idx, v) in plane.iter_mut().enumerate() {
        let py = (idx / SIDE) as f64 + 0.5;
        let px = (idx % SIDE) as f64 + 0.5;
        let d2 = (px - cx * scale).powi(2) + (py - cy * scale).powi(2);
        *v += amp * (-d2 / (2.0 * sigma_px * sigma_px)).exp();
    }
}

fn ellipse_field(plane: &mut [f64], cx: f64, cy: f64, rx: f64, ry: f64, depth: f64) {
    let scale = SIDE as f64;
    for (idx, v) in plane.iter_mut().enumerate() {
        let py = ((idx / SIDE) as f64 + 0.5) / scale;
        let px = ((idx % SIDE) as f64 + 0.5) / scale;
        let q = ((px - cx) / rx).powi(2) + ((py - cy) / ry).powi(2);
        if q < 1.0 {
            // Smooth falloff toward the ellipse boundary.
            *v += depth * (1.0 - q);
        }
    }
}

/// Grayscale two-class radiograph stand-in: elliptical "lung fields" on a
/// plate, class 1 gaining localized bright blobs.
pub fn synth_lungfields(per_class: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if per_class == 0 {
        return Err(DataError::Invalid("per_class must be at least 1".into()));
    }
    if !(0.0..=4.0).contains(&noise) {
        return Err(DataError::Invalid(format!("noise must lie in [0, 4], got {noise}")));
    }
    let n_classes = 2usize;
    let n = n_classes * per_class;
    let mut data = Vec::with_capacity(n * SIDE * SIDE);
    let mut labels = Vec::with_capacity(n);
    for class in 0..n_classes {
        for item in 0..per_class {
            let mut rng = Rng::new(derive_seed(seed, &format!("lung/{class}/{item}")));
            let mut plane = vec![0.1; SIDE * SIDE];
            let j = |rng: &mut Rng, s: f64| rng.normal_scaled(0.0, s * noise);
            let dy = j(&mut rng, 0.02);
            let dr = j(&mut rng, 0.015);
            ellipse_field(&mut plane, 0.33 + j(&mut rng, 0.02), 0.55 + dy, 0.15 + dr, 0.26 + dr, -0.85);
            ellipse_field(&mut plane, 0.67 + j(&mut rng, 0.02), 0.55 + dy, 0.15 + dr, 0.26 + dr, -0.85);
            // Mediastinum ridge between the fields.
            ellipse_field(&mut plane, 0.5, 0.5 + dy, 0.07, 0.4, 0.35);
            if class == 1 {
                for (bx, by) in [(0.33, 0.45), (0.67, 0.62), (0.38, 0.68)] {
                    gaussian_bump(
                        &mut plane,
                        bx + j(&mut rng, 0.045),
                        by + j(&mut rng, 0.045),
                        3.5 + j(&mut rng, 0.8).abs(),
                        0.9,
                    );
                }
            }
            if noise > 0.0 {
                for v in plane.iter_mut() {
                    *v += rng.normal_scaled(0.0, 0.04 * noise);
                }
            }
            for v in plane.iter_mut() {
                *v = v.clamp(-1.0, 1.0);
            }
            data.extend_from_slice(&plane);
            labels.push(class);
        }
    }
    let images = Tensor::new(vec![n, 1, SIDE, SIDE], data).map_err(DataError::Tensor)?;
    Dataset::new(
        images,
        labels,
        vec!["clear".into(), "opacity".into()],
        SplitTag::Full,
        format!("toy:lungfields(noise={noise},seed={seed})"),
    )
}
