//! Packed sign vectors. Bit `q` of the vector lives in byte `q / 8` at bit
//! position `q % 8` (little-endian bit order); a set bit is `+1`.

use serde::{Deserialize, Serialize};

use crate::error::{format_err, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignBits {
    words: Vec<u64>,
    len: usize,
}

impl SignBits {
    /// `len` bits, all `-1`.
    pub fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `true` means `+1`.
    #[inline]
    pub fn get(&self, q: usize) -> bool {
        debug_assert!(q < self.len);
        self.words[q >> 6] >> (q & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, q: usize, positive: bool) {
        debug_assert!(q < self.len);
        let mask = 1u64 << (q & 63);
        if positive {
            self.words[q >> 6] |= mask;
        } else {
            self.words[q >> 6] &= !mask;
        }
    }

    /// The sign of row `q` as `+1.0` / `-1.0`.
    #[inline]
    pub fn value(&self, q: usize) -> f64 {
        if self.get(q) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn count_positive(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(format_err(format!(
                "{} bytes cannot hold exactly {len} bits",
                bytes.len()
            )));
        }
        let mut words = vec![0u64; len.div_ceil(64)];
        for (b, byte) in bytes.iter().enumerate() {
            words[b / 8] |= (*byte as u64) << (8 * (b % 8));
        }
        if !len.is_multiple_of(64) {
            let last = words.len() - 1;
            if words[last] >> (len % 64) != 0 {
                return Err(format_err("padding bits past the end are set"));
            }
        }
        Ok(Self { words, len })
    }
}

impl FromIterator<bool> for SignBits {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let bits: Vec<bool> = iter.into_iter().collect();
        let mut out = SignBits::new(bits.len());
        for (q, b) in bits.into_iter().enumerate() {
            out.set(q, b);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn little_endian_bit_order() {
        let bits: SignBits = [true, false, false, false, false, false, false, false, false, true]
            .into_iter()
            .collect();
        assert_eq!(bits.to_bytes(), vec![0b0000_0001, 0b0000_0010]);
    }

    #[test]
    fn rejects_bad_lengths_and_padding() {
        assert!(SignBits::from_bytes(&[0, 0], 17).is_err());
        assert!(SignBits::from_bytes(&[0b1000_0000], 7).is_err());
    }

    proptest! {
        #[test]
        fn bytes_round_trip(bits in prop::collection::vec(any::<bool>(), 0..300)) {
            let packed: SignBits = bits.iter().copied().collect();
            let back = SignBits::from_bytes(&packed.to_bytes(), bits.len()).unwrap();
            prop_assert_eq!(back, packed);
        }
    }
}
