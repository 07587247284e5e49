//! Directory loader: one subdirectory per class, files decoded and
//! preprocessed to `C x 64 x 64` in `[-1, 1]`, deterministic ordering.

use std::path::{Path, PathBuf};

use ganforge_core::Tensor;

use crate::dataset::{Dataset, SplitTag};
use crate::error::{DataError, Result};
use crate::pnm::{decode_pnm, RawImage};
use crate::resize::resize_bicubic;
use crate::IMAGE_SIDE;

/// Convert a decoded raster (samples in `[0, 1]`) to a `C x H x W` tensor
/// in `[-1, 1]` with the requested channel count.
pub fn raw_to_tensor(img: &RawImage, out_channels: usize) -> Result<Tensor> {
    let RawImage { width, height, channels, samples } = img;
    let (w, h, c) = (*width, *height, *channels);
    let plane = w * h;
    let mut chw = vec![0.0; c * plane];
    for p in 0..plane {
        for ch in 0..c {
            chw[ch * plane + p] = 2.0 * samples[p * c + ch] - 1.0;
        }
    }
    let adjusted = match (c, out_channels) {
        (a, b) if a == b => chw,
        (1, n) => {
            // Promote grayscale by replication.
            let mut out = Vec::with_capacity(n * plane);
            for _ in 0..n {
                out.extend_from_slice(&chw);
            }
            out
        }
        (3, 1) => {
            // Collapse to the channel mean.
            let mut out = vec![0.0; plane];
            for (p, o) in out.iter_mut().enumerate() {
                *o = (chw[p] + chw[plane + p] + chw[2 * plane + p]) / 3.0;
            }
            out
        }
        (a, b) => {
            return Err(DataError::Invalid(format!("cannot adapt {a}-channel image to {b} channels")))
        }
    };
    Ok(Tensor::new(vec![out_channels, h, w], adjusted).map_err(DataError::Tensor)?)
}

fn decode_file(path: &Path) -> Result<RawImage> {
    let bytes = std::fs::read(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let decoded = match ext.as_str() {
        "pgm" | "ppm" | "pnm" => decode_pnm(&bytes),
        #[cfg(feature = "png")]
        "png" => crate::pngdec::decode_png(&bytes),
        other => Err(DataError::Format(format!("unsupported extension {other:?}"))),
    };
    decoded.map_err(|e| DataError::Decode { path: path.to_path_buf(), reason: e.to_string() })
}

/// Load a `root/class_name/file` tree into a canonical dataset.
///
/// Class ids follow the sorted class-directory names; files are visited in
/// sorted order inside each class. Empty class directories emit a warning
/// on stderr but keep their class id.
pub fn load_image_dir(root: &Path, out_channels: usize) -> Result<Dataset> {
    if !root.is_dir() {
        return Err(DataError::Invalid(format!("{} is not a directory", root.display())));
    }
    let mut class_dirs: Vec<PathBuf> = std::fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(DataError::Invalid(format!("{} holds no class directories", root.display())));
    }
    let mut class_names = Vec::new();
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (class, dir) in class_dirs.iter().enumerate() {
        let name = dir.file_name().unwrap().to_string_lossy().into_owned();
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        if files.is_empty() {
            eprintln!("warning: class directory {} is empty; class retained", dir.display());
        }
        for file in files {
            let raw = decode_file(&file)?;
            let t = raw_to_tensor(&raw, out_channels)?;
            let resized = resize_bicubic(&t, IMAGE_SIDE, IMAGE_SIDE)?;
            samples.push(resized);
            labels.push(class);
        }
        class_names.push(name);
    }
    if samples.is_empty() {
        return Err(DataError::Invalid("no decodable images found".into()));
    }
    let images = Tensor::stack(&samples).map_err(DataError::Tensor)?;
    Dataset::new(images, labels, class_names, SplitTag::Full, format!("dir:{}", root.display()))
}
