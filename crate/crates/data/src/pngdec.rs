//! Optional PNG decoding behind the `png` feature.

use crate::error::{DataError, Result};
use crate::pnm::RawImage;

pub fn decode_png(bytes: &[u8]) -> Result<RawImage> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| DataError::Format(format!("png: {e}")))?;
    let mut buf = vec![0u8; reader.output_buffer_size().ok_or_else(|| DataError::Format("png: output too large".into()))?];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| DataError::Format(format!("png: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let bytes_per_sample = match info.bit_depth {
        png::BitDepth::Eight => 1,
        png::BitDepth::Sixteen => 2,
        d => return Err(DataError::Format(format!("png: unsupported bit depth {d:?}"))),
    };
    let (channels, keep): (usize, usize) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        other => return Err(DataError::Format(format!("png: unsupported color type {other:?}"))),
    };
    let maxval = if bytes_per_sample == 1 { 255.0 } else { 65535.0 };
    let stride = channels * bytes_per_sample;
    let n = w * h;
    let mut samples = Vec::with_capacity(n * keep);
    let frame = &buf[..info.buffer_size()];
    for p in 0..n {
        for ch in 0..keep {
            let off = p * stride + ch * bytes_per_sample;
            let v = if bytes_per_sample == 1 {
                frame[off] as f64
            } else {
                u16::from_be_bytes([frame[off], frame[off + 1]]) as f64
            };
            samples.push(v / maxval);
        }
    }
    Ok(RawImage { width: w, height: h, channels: keep, samples })
}
