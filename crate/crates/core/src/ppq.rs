//! One-bit partition point query and its union-bounded count-sketch mode.
//!
//! For every repetition `r`, sub-iteration `l in 0..3` and bucket `B`, the
//! schema takes the measurement
//!
//! ```text
//! z[B,l,r] = sum over parts j hashed to B of sigma[j,B,l,r] * sum_{i in P_j} g[i,r] * x_i
//! ```
//!
//! and records both `sign(z)` and `sign(-z)`. A part is queried by counting
//! repetitions whose three bucket bits all agree (or all disagree) with the
//! part's own signs. A bucket showing `+1` in both polarities has `z = 0`,
//! which for gaussian weights happens only when every part in it is zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bits::SignBits;
use crate::error::{invalid, Result};
use crate::model::Signal;
use crate::partition::Partition;
use crate::seeded::RandomSource;

/// Sub-iterations per repetition.
pub const SUB_ITERATIONS: usize = 3;

/// Free constants of the point-query sketch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpqConstants {
    /// Buckets per unit of sparsity (`C_B`).
    pub bucket_factor: usize,
    /// Repetitions per bit of `log2(1/delta)` (`C_3`).
    pub rep_factor: f64,
    /// Output cap per unit of sparsity (`c`).
    pub cap_factor: usize,
}

impl Default for PpqConstants {
    fn default() -> Self {
        Self {
            bucket_factor: 32,
            rep_factor: 8.0,
            cap_factor: 16,
        }
    }
}

impl PpqConstants {
    pub fn repetitions(&self, delta: f64) -> usize {
        ((self.rep_factor * (1.0 / delta).log2()).ceil() as usize).max(1)
    }

    /// Rows of a point-query sketch: `2 * 3 * C_B k * R`.
    pub fn rows(&self, k: usize, delta: f64) -> usize {
        2 * SUB_ITERATIONS * self.bucket_factor * k * self.repetitions(delta)
    }

    pub fn cap(&self, k: usize) -> usize {
        self.cap_factor * k
    }
}

/// `(C_u, C_d)` with `P[|Y| < C_u] = 19/20` and `P[|Y| > C_d] = 19/20` for `Y ~ N(0,1)`.
pub fn gaussian_quantiles() -> (f64, f64) {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (normal.inverse_cdf(0.975), normal.inverse_cdf(0.525))
}

/// Operation counters reported by decoders.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeStats {
    pub point_queries: u64,
    pub bit_reads: u64,
}

impl DecodeStats {
    pub fn total(&self) -> u64 {
        self.point_queries + self.bit_reads
    }

    pub fn absorb(&mut self, other: DecodeStats) {
        self.point_queries += other.point_queries;
        self.bit_reads += other.bit_reads;
    }
}

/// Outcome of a single point query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PointQuery {
    pub accepted: bool,
    /// A zero bucket was observed: the part carries no mass.
    pub zero: bool,
    /// Good repetitions among those read.
    pub good: usize,
    pub reps_read: usize,
}

/// A part accepted by the count sketch together with its good-repetition count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hit {
    pub part: u64,
    pub good: usize,
}

/// Measured bits of one point-query sketch.
///
/// Row order is repetition-major, then sub-iteration, then bucket, then
/// polarity (`y` before `y-`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PpqBits {
    bits: SignBits,
    reps: usize,
    buckets: usize,
}

impl PpqBits {
    pub fn from_parts(bits: SignBits, reps: usize, buckets: usize) -> Result<Self> {
        let expect = 2 * SUB_ITERATIONS * reps * buckets;
        if bits.len() != expect {
            return Err(invalid(format!(
                "{} bits given, {expect} expected for {reps} repetitions of {buckets} buckets",
                bits.len()
            )));
        }
        Ok(Self {
            bits,
            reps,
            buckets,
        })
    }

    pub fn bits(&self) -> &SignBits {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn row(&self, r: usize, l: usize, bucket: usize, negated: bool) -> usize {
        row_index(self.buckets, r, l, bucket, negated)
    }

    /// `(y, y-)` for one bucket, `true` meaning `+1`.
    #[inline]
    pub fn pair(&self, r: usize, l: usize, bucket: usize) -> (bool, bool) {
        let q = self.row(r, l, bucket, false);
        (self.bits.get(q), self.bits.get(q + 1))
    }
}

#[inline]
fn row_index(buckets: usize, r: usize, l: usize, bucket: usize, negated: bool) -> usize {
    (((r * SUB_ITERATIONS + l) * buckets + bucket) << 1) | negated as usize
}

/// The implicit measurement matrix of a point-query sketch over partition `P`.
#[derive(Clone, Debug)]
pub struct PpqSchema<P> {
    partition: P,
    k: usize,
    delta: f64,
    consts: PpqConstants,
    reps: usize,
    buckets: usize,
    seed: u64,
    hashes: RandomSource,
    gaussians: RandomSource,
    c_u: f64,
    c_d: f64,
}

impl<P: Partition> PpqSchema<P> {
    pub fn build(
        partition: P,
        k: usize,
        delta: f64,
        consts: PpqConstants,
        seed: u64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("delta = {delta} must lie in (0, 1)")));
        }
        if k == 0 {
            return Err(invalid("sparsity k must be positive"));
        }
        if consts.bucket_factor == 0 || consts.cap_factor == 0 || !(consts.rep_factor > 0.0) {
            return Err(invalid("sketch constants must be positive"));
        }
        let src = RandomSource::new(seed);
        let (c_u, c_d) = gaussian_quantiles();
        Ok(Self {
            k,
            delta,
            consts,
            reps: consts.repetitions(delta),
            buckets: consts.bucket_factor * k,
            seed,
            hashes: src.derive(&[0x6861_7368]),
            gaussians: src.derive(&[0x6761_7573]),
            c_u,
            c_d,
            partition,
        })
    }

    /// Count-sketch mode: per-part failure `T^-(C0+1)` so that a union bound
    /// over all `T` parts leaves failure `T^-C0`.
    pub fn count_sketch(
        partition: P,
        k: usize,
        c0: f64,
        consts: PpqConstants,
        seed: u64,
    ) -> Result<Self> {
        let parts = partition.part_count().max(2) as f64;
        let delta = parts.powf(-(c0 + 1.0));
        Self::build(partition, k, delta, consts, seed)
    }

    pub fn partition(&self) -> &P {
        &self.partition
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn constants(&self) -> PpqConstants {
        self.consts
    }
    pub fn repetitions(&self) -> usize {
        self.reps
    }
    pub fn buckets(&self) -> usize {
        self.buckets
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn rows(&self) -> usize {
        2 * SUB_ITERATIONS * self.buckets * self.reps
    }
    pub fn quantiles(&self) -> (f64, f64) {
        (self.c_u, self.c_d)
    }
    pub fn cap(&self) -> usize {
        self.consts.cap(self.k)
    }

    /// Good repetitions needed to accept: `ceil(R/2) + 1`.
    pub fn threshold(&self) -> usize {
        self.reps.div_ceil(2) + 1
    }

    /// Slack in the sufficient condition `C_d / sqrt(k) > C_u sqrt(20 / (C_B k))`
    /// behind the positive-detection argument; negative means it does not hold.
    pub fn detection_margin(&self) -> f64 {
        let k = self.k as f64;
        self.c_d / k.sqrt() - self.c_u * (20.0 / (self.consts.bucket_factor as f64 * k)).sqrt()
    }

    /// Human-readable notes on constants that fall outside the analysed regime.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.detection_margin() <= 0.0 {
            out.push(format!(
                "C_B = {} is below the bucket count the detection argument assumes \
                 (needs C_B > 20 (C_u / C_d)^2 = {:.0})",
                self.consts.bucket_factor,
                20.0 * (self.c_u / self.c_d).powi(2)
            ));
        }
        out
    }

    /// Bucket `h_{r,l}(part)` and sign `sigma[part, B, l, r]`, drawn from one
    /// hash since the bucket is itself a function of `(r, l, part)`.
    #[inline]
    pub fn slot(&self, r: usize, l: usize, part: u64) -> (usize, f64) {
        let h = self.hashes.u64_at(&[r as u64, l as u64, part]);
        let bucket = (((h >> 1) as u128 * self.buckets as u128) >> 63) as usize;
        (bucket, if h & 1 == 0 { 1.0 } else { -1.0 })
    }

    #[inline]
    pub fn bucket_of(&self, r: usize, l: usize, part: u64) -> usize {
        self.slot(r, l, part).0
    }

    #[inline]
    pub fn part_sign(&self, part: u64, l: usize, r: usize) -> f64 {
        self.slot(r, l, part).1
    }

    #[inline]
    pub fn gaussian(&self, i: usize, r: usize) -> f64 {
        self.gaussians.gaussian_at(&[i as u64, r as u64])
    }

    /// Nonzero coordinates of `x` inside the partition's domain, grouped by part.
    fn grouped(&self, x: &Signal) -> Result<Vec<(u64, Vec<(usize, f64)>)>> {
        if x.dim() != self.partition.dim() {
            return Err(invalid(format!(
                "signal has dimension {}, schema expects {}",
                x.dim(),
                self.partition.dim()
            )));
        }
        let mut groups: BTreeMap<u64, Vec<(usize, f64)>> = BTreeMap::new();
        for (i, v) in x.nonzeros() {
            if let Some(part) = self.partition.part_of(i) {
                groups.entry(part).or_default().push((i, v));
            }
        }
        Ok(groups.into_iter().collect())
    }

    /// The real-valued measurements `z[B,l,r]` before quantization, in row order
    /// without the negated copies.
    pub fn linear_measurements(&self, x: &Signal) -> Result<Vec<f64>> {
        let groups = self.grouped(x)?;
        let per_rep = SUB_ITERATIONS * self.buckets;
        let mut z = vec![0.0; per_rep * self.reps];
        for r in 0..self.reps {
            let zr = &mut z[r * per_rep..(r + 1) * per_rep];
            for (part, coords) in &groups {
                let v: f64 = coords.iter().map(|&(i, xi)| self.gaussian(i, r) * xi).sum();
                for l in 0..SUB_ITERATIONS {
                    let (b, sigma) = self.slot(r, l, *part);
                    zr[l * self.buckets + b] += sigma * v;
                }
            }
        }
        Ok(z)
    }

    /// `y = sign(z)` and `y- = sign(-z)` for every bucket. Cost is one pass over
    /// the nonzeros of `x` per repetition.
    pub fn measure(&self, x: &Signal) -> Result<PpqBits> {
        let z = self.linear_measurements(x)?;
        let mut bits = SignBits::new(self.rows());
        for (q, zq) in z.iter().enumerate() {
            bits.set(2 * q, *zq >= 0.0);
            bits.set(2 * q + 1, -*zq >= 0.0);
        }
        PpqBits::from_parts(bits, self.reps, self.buckets)
    }

    pub fn check_bits(&self, bits: &PpqBits) -> Result<()> {
        if bits.reps != self.reps || bits.buckets != self.buckets {
            return Err(invalid(format!(
                "bits shaped {}x{} do not match schema {}x{}",
                bits.reps, bits.buckets, self.reps, self.buckets
            )));
        }
        Ok(())
    }

    /// Decides whether `part` holds a heavy coordinate.
    ///
    /// Reading stops early once acceptance is out of reach or a zero bucket
    /// shows up, so `good` of a rejected part counts only repetitions read.
    pub fn query(&self, bits: &PpqBits, part: u64, stats: &mut DecodeStats) -> Result<PointQuery> {
        if !self.partition.contains_part(part) {
            return Err(invalid(format!("part {part} is not in the partition")));
        }
        self.check_bits(bits)?;
        Ok(self.query_unchecked(bits, part, stats))
    }

    /// Good repetitions of `part` over all `R`, with no early stop and no
    /// zero rule; a diagnostic for the separation between heavy and crowded parts.
    pub fn good_repetitions(&self, bits: &PpqBits, part: u64) -> Result<usize> {
        if !self.partition.contains_part(part) {
            return Err(invalid(format!("part {part} is not in the partition")));
        }
        self.check_bits(bits)?;
        Ok((0..self.reps)
            .filter(|&r| {
                let agree: Vec<bool> = (0..SUB_ITERATIONS)
                    .map(|l| {
                        let (b, sigma) = self.slot(r, l, part);
                        bits.pair(r, l, b).0 == (sigma > 0.0)
                    })
                    .collect();
                agree.iter().all(|&a| a == agree[0])
            })
            .count())
    }

    fn query_unchecked(&self, bits: &PpqBits, part: u64, stats: &mut DecodeStats) -> PointQuery {
        stats.point_queries += 1;
        let threshold = self.threshold();
        let mut good = 0;
        for r in 0..self.reps {
            let mut agree = [false; SUB_ITERATIONS];
            for (l, slot) in agree.iter_mut().enumerate() {
                let (b, sigma) = self.slot(r, l, part);
                let (y, y_neg) = bits.pair(r, l, b);
                stats.bit_reads += 2;
                if y && y_neg {
                    return PointQuery {
                        accepted: false,
                        zero: true,
                        good,
                        reps_read: r + 1,
                    };
                }
                *slot = y == (sigma > 0.0);
            }
            if agree.iter().all(|&a| a == agree[0]) {
                good += 1;
            }
            if good + (self.reps - r - 1) < threshold {
                return PointQuery {
                    accepted: false,
                    zero: false,
                    good,
                    reps_read: r + 1,
                };
            }
        }
        PointQuery {
            accepted: good >= threshold,
            zero: false,
            good,
            reps_read: self.reps,
        }
    }

    /// Count-sketch decoding: every queried part that passes, ranked by good
    /// count (ties to the lower part) and capped at `c k`. Without candidates
    /// all parts are queried.
    pub fn decode(
        &self,
        bits: &PpqBits,
        candidates: Option<&[u64]>,
        stats: &mut DecodeStats,
    ) -> Result<Vec<Hit>> {
        self.check_bits(bits)?;
        let mut hits = Vec::new();
        let mut visit = |part: u64, stats: &mut DecodeStats| {
            let q = self.query_unchecked(bits, part, stats);
            if q.accepted {
                hits.push(Hit {
                    part,
                    good: q.good,
                });
            }
        };
        match candidates {
            Some(list) => {
                if let Some(bad) = list.iter().find(|p| !self.partition.contains_part(**p)) {
                    return Err(invalid(format!("part {bad} is not in the partition")));
                }
                for &part in list {
                    visit(part, stats);
                }
            }
            None => {
                for part in self.partition.parts() {
                    visit(part, stats);
                }
            }
        }
        hits.sort_by(|a, b| b.good.cmp(&a.good).then(a.part.cmp(&b.part)));
        hits.dedup_by_key(|h| h.part);
        hits.truncate(self.cap());
        Ok(hits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::IntervalPartition;

    fn schema(n: usize, parts: usize, k: usize, delta: f64) -> PpqSchema<IntervalPartition> {
        let p = IntervalPartition::with_parts(n, parts).unwrap();
        PpqSchema::build(p, k, delta, PpqConstants::default(), 99).unwrap()
    }

    #[test]
    fn row_count_formula() {
        let s = schema(64, 8, 8, 1.0 / 16.0);
        assert_eq!(s.repetitions(), 32);
        assert_eq!(s.rows(), 49152);
        assert_eq!(PpqConstants::default().rows(8, 1.0 / 16.0), 49152);
    }

    #[test]
    fn quantiles_match_nineteen_twentieths() {
        let (c_u, c_d) = gaussian_quantiles();
        assert!((c_u - 1.959964).abs() < 1e-6);
        assert!((c_d - 0.062707).abs() < 1e-6);
        let normal = Normal::new(0.0, 1.0).unwrap();
        assert!((2.0 * normal.cdf(c_u) - 1.0 - 0.95).abs() < 1e-6);
        assert!((2.0 * (1.0 - normal.cdf(c_d)) - 0.95).abs() < 1e-6);
    }

    #[test]
    fn default_constants_trip_the_detection_warning() {
        let s = schema(64, 8, 8, 0.1);
        assert!(s.detection_margin() < 0.0);
        assert_eq!(s.warnings().len(), 1);
    }

    #[test]
    fn rejects_bad_delta() {
        let p = IntervalPartition::with_parts(8, 2).unwrap();
        for d in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(PpqSchema::build(p, 1, d, PpqConstants::default(), 0).is_err());
        }
    }

    #[test]
    fn zero_signal_gives_all_positive_bits_and_rejects() {
        let s = schema(64, 8, 2, 0.1);
        let bits = s.measure(&Signal::zeros(64)).unwrap();
        assert_eq!(bits.bits().count_positive(), s.rows());
        let mut st = DecodeStats::default();
        for part in 0..8 {
            let q = s.query(&bits, part, &mut st).unwrap();
            assert!(!q.accepted && q.zero);
        }
        assert!(s.decode(&bits, None, &mut st).unwrap().is_empty());
        assert!(s.decode(&bits, Some(&[]), &mut st).unwrap().is_empty());
    }

    #[test]
    fn single_coordinate_trace() {
        let s = schema(64, 8, 2, 0.1);
        let (i, xi) = (13usize, -0.7);
        let part = 1u64;
        let x = Signal::from_sparse(64, &[(i, xi)]).unwrap();
        let bits = s.measure(&x).unwrap();
        for r in 0..s.repetitions() {
            for l in 0..3 {
                let hot = s.bucket_of(r, l, part);
                for b in 0..s.buckets() {
                    let (y, yn) = bits.pair(r, l, b);
                    if b == hot {
                        let expect = s.part_sign(part, l, r) * s.gaussian(i, r) * xi >= 0.0;
                        assert_eq!(y, expect);
                        assert_eq!(yn, !expect);
                    } else {
                        assert!(y && yn);
                    }
                }
            }
        }
        let mut st = DecodeStats::default();
        assert!(s.query(&bits, part, &mut st).unwrap().accepted);
        assert!(s.query(&bits, 8, &mut st).is_err());
    }

    #[test]
    fn deterministic_measurement() {
        let s = schema(64, 8, 2, 0.1);
        let x = Signal::new((0..64).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        assert_eq!(s.measure(&x).unwrap(), s.measure(&x).unwrap());
        assert!(s.measure(&Signal::zeros(63)).is_err());
    }

    #[test]
    fn complement_scaling_and_flip() {
        let s = schema(256, 32, 4, 0.05);
        let x = Signal::new((0..256).map(|i| ((i * 7919) % 113) as f64 - 50.0).collect()).unwrap();
        let z = s.linear_measurements(&x).unwrap();
        let bits = s.measure(&x).unwrap();
        for q in 0..z.len() {
            let (y, yn) = (bits.bits().get(2 * q), bits.bits().get(2 * q + 1));
            assert!(y || yn, "(-1,-1) pair at row {q}");
        }
        assert_eq!(s.measure(&x.scaled(3.5)).unwrap(), bits);
        let flipped = s.measure(&x.scaled(-1.0)).unwrap();
        for (q, zq) in z.iter().enumerate() {
            if *zq != 0.0 {
                assert_ne!(flipped.bits().get(2 * q), bits.bits().get(2 * q));
            }
        }
    }
}
