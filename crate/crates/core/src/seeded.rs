//! Deterministic randomness keyed by `(seed, label)`.
//!
//! Every random object in a sketch (bucket hashes, signs, gaussians) is a pure
//! function of a 64-bit seed and a short tuple of integers. Nothing is stored:
//! the measurement side and the decoding side regenerate the same values on
//! demand.

use rand::{Error as RngError, RngCore};
use rand_distr::{Distribution, StandardNormal};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed pseudorandom function on `(seed, words)`.
///
/// Words are absorbed by an invertible multiply-rotate step, so distinct
/// labels of equal length reach distinct states before the final avalanche.
#[inline]
pub fn prf(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    for &w in words {
        h = (h.rotate_left(27) ^ w).wrapping_mul(0xff51_afd7_ed55_8ccd);
    }
    mix64(h ^ words.len() as u64)
}

/// Maps a 64-bit hash to a uniform double in the open interval (0, 1).
#[inline]
fn unit_open(h: u64) -> f64 {
    ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// A master seed from which labelled, independent-behaving streams derive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomSource {
    seed: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A child source for the given label.
    pub fn derive(&self, label: &[u64]) -> RandomSource {
        RandomSource {
            seed: prf(self.seed, label),
        }
    }

    #[inline]
    pub fn u64_at(&self, label: &[u64]) -> u64 {
        prf(self.seed, label)
    }

    #[inline]
    pub fn uniform_at(&self, label: &[u64]) -> f64 {
        unit_open(prf(self.seed, label))
    }

    /// Uniform integer in `0..range`.
    #[inline]
    pub fn below_at(&self, label: &[u64], range: u64) -> u64 {
        ((prf(self.seed, label) as u128 * range as u128) >> 64) as u64
    }

    /// +1 or -1 with equal probability.
    #[inline]
    pub fn sign_at(&self, label: &[u64]) -> f64 {
        if prf(self.seed, label) >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Standard normal deviate, a pure function of `(seed, label)`.
    ///
    /// The label keys a splitmix stream that feeds a ziggurat sampler; the
    /// sampler usually consumes a single word.
    #[inline]
    pub fn gaussian_at(&self, label: &[u64]) -> f64 {
        let mut rng = SplitMix::new(prf(self.seed, label));
        StandardNormal.sample(&mut rng)
    }
}

/// Splitmix64 stream, used only as a short-lived word source for samplers.
struct SplitMix {
    state: u64,
}

impl SplitMix {
    fn new(state: u64) -> Self {
        Self { state }
    }
}

impl RngCore for SplitMix {
    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), RngError> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// A seeded hash function `[domain] -> [range]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HashFamily {
    seed: u64,
    domain: u64,
    range: u64,
}

impl HashFamily {
    pub fn new(seed: u64, domain: u64, range: u64) -> Self {
        assert!(range >= 1, "hash range must be nonempty");
        Self {
            seed,
            domain,
            range,
        }
    }

    pub fn domain(&self) -> u64 {
        self.domain
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    #[inline]
    pub fn hash(&self, x: u64) -> u64 {
        debug_assert!(x < self.domain);
        ((prf(self.seed, &[x]) as u128 * self.range as u128) >> 64) as u64
    }
}
