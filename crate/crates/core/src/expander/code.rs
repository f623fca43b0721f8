//! Systematic Reed-Solomon code whose symbols are the per-layer chunks.
//!
//! A coordinate index is cut into `data` symbols of `t` bits; `parity`
//! further symbols are evaluations of the same interpolating polynomial.
//! Any `data` correct symbols determine the codeword, so up to
//! `floor(e0 * s)` wrong or missing chunks are corrected.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::gf::Gf;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeShape {
    pub message_bits: u32,
    /// Chunks per codeword (`s`).
    pub chunks: usize,
    /// Bits per chunk (`t`).
    pub chunk_bits: u32,
    pub data_chunks: usize,
    pub error_fraction: f64,
}

#[derive(Clone, Debug)]
pub struct ChunkCode {
    shape: CodeShape,
    field: Gf,
    points: Vec<u16>,
}

impl ChunkCode {
    pub fn new(message_bits: u32, chunks: usize, error_fraction: f64) -> Result<Self> {
        if !(error_fraction > 0.0 && error_fraction < 0.5) {
            return Err(invalid(format!(
                "correctable fraction {error_fraction} must lie in (0, 1/2)"
            )));
        }
        if chunks < 2 || message_bits == 0 {
            return Err(invalid("code needs at least two chunks and one message bit"));
        }
        let correctable = (error_fraction * chunks as f64).floor() as usize;
        let data_chunks = chunks - 2 * correctable;
        let point_bits = usize::BITS - (chunks - 1).leading_zeros();
        let chunk_bits = message_bits
            .div_ceil(data_chunks as u32)
            .max(point_bits)
            .max(2);
        if chunk_bits > 16 {
            return Err(invalid(format!(
                "{chunk_bits}-bit chunks are too wide; use more chunks"
            )));
        }
        Ok(Self {
            shape: CodeShape {
                message_bits,
                chunks,
                chunk_bits,
                data_chunks,
                error_fraction,
            },
            field: Gf::new(chunk_bits),
            points: (0..chunks as u16).collect(),
        })
    }

    pub fn shape(&self) -> CodeShape {
        self.shape
    }

    pub fn chunks(&self) -> usize {
        self.shape.chunks
    }

    pub fn chunk_bits(&self) -> u32 {
        self.shape.chunk_bits
    }

    /// Chunks that may be wrong or missing: `floor(e0 * s)`.
    pub fn correctable(&self) -> usize {
        (self.shape.chunks - self.shape.data_chunks) / 2
    }

    pub fn encode(&self, message: u64) -> Vec<u16> {
        let CodeShape {
            chunk_bits,
            data_chunks,
            chunks,
            ..
        } = self.shape;
        debug_assert!(self.shape.message_bits >= 64 || message >> self.shape.message_bits == 0);
        let mask = (1u64 << chunk_bits) - 1;
        let mut out: Vec<u16> = (0..data_chunks)
            .map(|c| ((message >> (c as u32 * chunk_bits)) & mask) as u16)
            .collect();
        let xs = &self.points[..data_chunks];
        for p in data_chunks..chunks {
            let v = self.field.interpolate(xs, &out[..data_chunks], self.points[p]);
            out.push(v);
        }
        out
    }

    /// Errors-and-erasures decoding; `None` entries are erasures. Returns
    /// `Ok(None)` when no message lies within the correction radius.
    pub fn decode(&self, received: &[Option<u16>]) -> Result<Option<u64>> {
        let CodeShape {
            chunk_bits,
            data_chunks,
            chunks,
            message_bits,
            ..
        } = self.shape;
        if received.len() != chunks {
            return Err(invalid(format!(
                "{} chunks received, code has {chunks}",
                received.len()
            )));
        }
        if let Some(bad) = received.iter().flatten().find(|c| **c >> chunk_bits != 0) {
            return Err(invalid(format!("chunk {bad} wider than {chunk_bits} bits")));
        }
        let avail: Vec<usize> = (0..chunks).filter(|&p| received[p].is_some()).collect();
        let erasures = chunks - avail.len();
        if avail.len() < data_chunks {
            return Ok(None);
        }
        let budget = chunks - data_chunks;
        for subset in avail.iter().copied().combinations(data_chunks) {
            let xs: Vec<u16> = subset.iter().map(|&p| self.points[p]).collect();
            let ys: Vec<u16> = subset.iter().map(|&p| received[p].unwrap()).collect();
            let wrong = avail
                .iter()
                .filter(|&&p| self.field.interpolate(&xs, &ys, self.points[p]) != received[p].unwrap())
                .count();
            if 2 * wrong + erasures > budget {
                continue;
            }
            let mut message = 0u64;
            for c in 0..data_chunks {
                let sym = self.field.interpolate(&xs, &ys, self.points[c]) as u64;
                message |= sym << (c as u32 * chunk_bits);
            }
            if message_bits < 64 && message >> message_bits != 0 {
                return Ok(None);
            }
            return Ok(Some(message));
        }
        Ok(None)
    }
}
