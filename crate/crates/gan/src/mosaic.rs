//! PGM sample-grid mosaics for eyeballing training progress.

use std::path::Path;

use ganforge_core::Tensor;
use ganforge_data::pnm::encode_pgm;

use crate::error::{GanError, Result};

/// Tile a batch into a grayscale grid (channels averaged, `[-1,1]`
/// mapped to 0..255) and return the PGM bytes.
pub fn pgm_grid_bytes(batch: &Tensor, cols: usize) -> Result<Vec<u8>> {
    let (n, c, h, w) = batch.dims4().map_err(GanError::Tensor)?;
    if cols == 0 {
        return Err(GanError::Invalid("grid needs at least one column".into()));
    }
    let rows = n.div_ceil(cols);
    let (gw, gh) = (cols * w, rows * h);
    let mut pixels = vec![0u8; gw * gh];
    for s in 0..n {
        let (gr, gc) = (s / cols, s % cols);
        for y in 0..h {
            for x in 0..w {
                let mut v = 0.0;
                for ch in 0..c {
                    v += batch.data()[((s * c + ch) * h + y) * w + x];
                }
                v /= c as f64;
                let byte = (((v + 1.0) / 2.0) * 255.0).round().clamp(0.0, 255.0) as u8;
                pixels[(gr * h + y) * gw + gc * w + x] = byte;
            }
        }
    }
    Ok(encode_pgm(gw, gh, &pixels))
}

pub fn write_sample_grid(path: &Path, batch: &Tensor, cols: usize) -> Result<()> {
    let bytes = pgm_grid_bytes(batch, cols)?;
    std::fs::write(path, bytes)?;
    Ok(())
}
