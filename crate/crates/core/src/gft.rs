//! The `GFT1` binary tensor container.
//!
//! Layout: magic `"GFT1"`, `u32` rank, `u32` dims (all little-endian),
//! then the raw `f64` little-endian payload in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Result, TensorError};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"GFT1";
const MAX_RANK: u32 = 8;

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 + 4 * t.rank() + 8 * t.elems());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
    for &d in t.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn take_u32(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32> {
    let end = pos.checked_add(4).filter(|&e| e <= bytes.len());
    let Some(end) = end else {
        return Err(TensorError::Format(format!("truncated before {what}")));
    };
    let v = u32::from_le_bytes(bytes[*pos..end].try_into().unwrap());
    *pos = end;
    Ok(v)
}

/// Parse a tensor record at the start of `bytes`; returns the tensor and
/// the number of bytes consumed, allowing records to be concatenated.
/// Dim products are validated against the remaining byte count before any
/// allocation, and non-finite payloads are rejected.
pub fn read_tensor_block(bytes: &[u8]) -> Result<(Tensor, usize)> {
    let mut pos = 0usize;
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(TensorError::Format("missing GFT1 magic".into()));
    }
    pos += 4;
    let rank = take_u32(bytes, &mut pos, "rank")?;
    if rank > MAX_RANK {
        return Err(TensorError::Format(format!("rank {rank} exceeds maximum {MAX_RANK}")));
    }
    let mut shape = Vec::with_capacity(rank as usize);
    let mut elems = 1usize;
    for i in 0..rank {
        let d = take_u32(bytes, &mut pos, "dims")? as usize;
        if d == 0 {
            return Err(TensorError::Format(format!("zero extent on axis {i}")));
        }
        elems = elems
            .checked_mul(d)
            .ok_or_else(|| TensorError::Format("dimension product overflows".into()))?;
        shape.push(d);
    }
    let payload = elems
        .checked_mul(8)
        .ok_or_else(|| TensorError::Format("payload size overflows".into()))?;
    if bytes.len() - pos < payload {
        return Err(TensorError::Format(format!(
            "payload needs {payload} bytes, {} remain",
            bytes.len() - pos
        )));
    }
    let mut data = Vec::with_capacity(elems);
    for chunk in bytes[pos..pos + payload].chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    pos += payload;
    let t = Tensor::new(shape, data)?;
    t.validate_finite("GFT1 payload")?;
    Ok((t, pos))
}

/// Parse a buffer that must contain exactly one tensor record.
pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    let (t, used) = read_tensor_block(bytes)?;
    if used != bytes.len() {
        return Err(TensorError::Format(format!("{} trailing bytes after tensor record", bytes.len() - used)));
    }
    Ok(t)
}

pub fn write_tensor_file(path: &Path, t: &Tensor) -> Result<()> {
    fs::write(path, encode_tensor(t))?;
    Ok(())
}

pub fn read_tensor_file(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path)?;
    decode_tensor(&bytes)
}
