//! Self-describing measurement files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "OBCS"  u16 version  u32 header_len  header (JSON, header_len bytes)
//! then per block:  u64 bit_count  ceil(bit_count / 8) bytes of packed bits
//! ```
//!
//! The header carries the scheme description, so a file decodes without any
//! other input. Bits are packed least-significant first.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bits::SignBits;
use crate::error::{format_err, Result};
use crate::sketch::{BlockShape, SchemeSpec, Sketch};

pub const MAGIC: [u8; 4] = *b"OBCS";
pub const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub spec: SchemeSpec,
    /// Total rows across blocks.
    pub rows: usize,
    /// Per block: bit count and, for point-query blocks, `(R, buckets)`.
    pub blocks: Vec<BlockShape>,
}

impl Header {
    pub fn new(spec: &SchemeSpec, sketch: &Sketch) -> Self {
        let blocks = sketch.block_shapes();
        Self {
            spec: spec.clone(),
            rows: blocks.iter().map(|b| b.bits).sum(),
            blocks,
        }
    }
}

pub fn write_measurement<W: Write>(mut w: W, header: &Header, blocks: &[SignBits]) -> Result<()> {
    if blocks.len() != header.blocks.len() {
        return Err(format_err(format!(
            "header declares {} blocks, got {}",
            header.blocks.len(),
            blocks.len()
        )));
    }
    let json = serde_json::to_vec(header)?;
    let len = u32::try_from(json.len()).map_err(|_| format_err("header too large"))?;
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&json)?;
    for b in blocks {
        w.write_all(&(b.len() as u64).to_le_bytes())?;
        w.write_all(&b.to_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_measurement<R: Read>(mut r: R) -> Result<(Header, Vec<SignBits>)> {
    if read_array::<4, _>(&mut r)? != MAGIC {
        return Err(format_err("not a measurement file (bad magic)"));
    }
    let version = u16::from_le_bytes(read_array(&mut r)?);
    if version != VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    let len = u32::from_le_bytes(read_array(&mut r)?) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    let mut blocks = Vec::with_capacity(header.blocks.len());
    for (i, shape) in header.blocks.iter().enumerate() {
        let bits = u64::from_le_bytes(read_array(&mut r)?) as usize;
        if bits != shape.bits {
            return Err(format_err(format!(
                "block {i} has {bits} bits, header says {}",
                shape.bits
            )));
        }
        let mut bytes = vec![0u8; bits.div_ceil(8)];
        r.read_exact(&mut bytes)?;
        blocks.push(SignBits::from_bytes(&bytes, bits)?);
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(format_err("trailing bytes after the last block"));
    }
    Ok((header, blocks))
}

/// Rebuilds the sketch named in `header` and checks it against the file.
pub fn rebuild(header: &Header) -> Result<Sketch> {
    let sketch = header.spec.build()?;
    if sketch.block_shapes() != header.blocks {
        return Err(format_err(
            "header block layout does not match the rebuilt sketch",
        ));
    }
    Ok(sketch)
}
