//! PGM/PPM decoding and encoding (binary P5/P6 and ASCII P2/P3).
//!
//! Decoded samples are normalized to `[0, 1]`. All dimension products are
//! validated before allocation so arbitrary inputs cannot request
//! unbounded memory.

use crate::error::{DataError, Result};

/// Decoded raster with samples in `[0, 1]`, channel-interleaved row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub samples: Vec<f64>,
}

const MAX_PIXELS: usize = 1 << 26;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(DataError::Format("unexpected end of header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        let s = std::str::from_utf8(tok).map_err(|_| DataError::Format(format!("non-ascii {what}")))?;
        s.parse::<usize>().map_err(|_| DataError::Format(format!("bad {what}: {s:?}")))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> Result<RawImage> {
    if bytes.len() < 2 {
        return Err(DataError::Format("too short for a PNM header".into()));
    }
    let (binary, channels) = match &bytes[..2] {
        b"P2" => (false, 1),
        b"P3" => (false, 3),
        b"P5" => (true, 1),
        b"P6" => (true, 3),
        other => {
            return Err(DataError::Format(format!(
                "unsupported PNM magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(DataError::Format("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(DataError::Format(format!("maxval {maxval} out of range")));
    }
    let n = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(channels))
        .filter(|&p| p <= MAX_PIXELS)
        .ok_or_else(|| DataError::Format(format!("image {width}x{height} too large")))?;
    let scale = 1.0 / maxval as f64;
    let mut samples = Vec::with_capacity(n);
    if binary {
        // Exactly one whitespace byte separates the header from the payload.
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(DataError::Format("missing separator before payload".into()));
        }
        cur.pos += 1;
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        let payload = bytes
            .get(cur.pos..cur.pos + need)
            .ok_or_else(|| DataError::Format(format!("payload needs {need} bytes")))?;
        if wide {
            for pair in payload.chunks_exact(2) {
                let v = u16::from_be_bytes([pair[0], pair[1]]) as usize;
                if v > maxval {
                    return Err(DataError::Format(format!("sample {v} exceeds maxval {maxval}")));
                }
                samples.push(v as f64 * scale);
            }
        } else {
            for &b in payload {
                if b as usize > maxval {
                    return Err(DataError::Format(format!("sample {b} exceeds maxval {maxval}")));
                }
                samples.push(b as f64 * scale);
            }
        }
    } else {
        for _ in 0..n {
            let v = cur.number("sample")?;
            if v > maxval {
                return Err(DataError::Format(format!("sample {v} exceeds maxval {maxval}")));
            }
            samples.push(v as f64 * scale);
        }
    }
    Ok(RawImage { width, height, channels, samples })
}

/// Encode an 8-bit grayscale PGM (binary P5).
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "encode_pgm: pixel count");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Encode an 8-bit RGB PPM (binary P6).
pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    assert_eq!(rgb.len(), width * height * 3, "encode_ppm: sample count");
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_pgm_roundtrip() {
        let px = vec![0u8, 128, 255, 64, 32, 16];
        let bytes = encode_pgm(3, 2, &px);
        let img = decode_pnm(&bytes).unwrap();
        assert_eq!(img.width, 3);
        assert_eq!(img.height, 2);
        assert_eq!(img.channels, 1);
        assert!((img.samples[2] - 1.0).abs() < 1e-12);
        assert!((img.samples[0]).abs() < 1e-12);
    }

    #[test]
    fn ascii_pgm_with_comment() {
        let text = b"P2\n# a comment\n2 2\n255\n0 255\n128 64\n";
        let img = decode_pnm(text).unwrap();
        assert_eq!(img.samples.len(), 4);
        assert!((img.samples[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ppm_has_three_channels() {
        let bytes = encode_ppm(1, 1, &[255, 0, 128]);
        let img = decode_pnm(&bytes).unwrap();
        assert_eq!(img.channels, 3);
        assert_eq!(img.samples.len(), 3);
    }

    #[test]
    fn truncated_and_oversized_inputs_error() {
        assert!(decode_pnm(b"P5\n3 2\n255\n\x00").is_err());
        assert!(decode_pnm(b"P5\n99999999 99999999\n255\n").is_err());
        assert!(decode_pnm(b"P7\n1 1\n255\n\x00").is_err());
    }
}
