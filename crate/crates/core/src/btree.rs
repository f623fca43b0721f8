//! Hierarchical interval partitions decoded top-down.
//!
//! Level `r` splits `[n]` into contiguous intervals of width `w_r`, with
//! `w_R = 1` at the bottom and each `w_r` a multiple of `w_{r+1}` by at most
//! `b`. Decoding runs the count sketch on the `Theta(k)` root intervals, then
//! point-queries the children of the survivors level by level.

use std::collections::BTreeSet;

use crate::error::{invalid, Result};
use crate::model::Signal;
use crate::partition::{IntervalPartition, Partition};
use crate::ppq::{DecodeStats, PpqBits, PpqConstants, PpqSchema};
use crate::seeded::RandomSource;

/// Smallest `R` with `k * b^R >= n`.
pub fn depth(n: usize, k: usize, b: usize) -> usize {
    let mut reach = k as u128;
    let mut r = 0;
    while reach < n as u128 {
        reach *= b as u128;
        r += 1;
    }
    r
}

/// Interval widths for levels `0..=R`, nested bottom-up from `w_R = 1`.
pub fn level_widths(n: usize, k: usize, b: usize) -> Vec<usize> {
    let levels = depth(n, k, b);
    let mut widths = vec![1usize; levels + 1];
    for r in (0..levels).rev() {
        let below = widths[r + 1] as u128;
        let denom = k as u128 * (b as u128).pow(r as u32) * below;
        let ratio = (n as u128).div_ceil(denom).max(1);
        widths[r] = (ratio * below) as usize;
    }
    widths
}

/// Per-level failure target `delta / (b k R)`.
pub fn level_delta(n: usize, k: usize, b: usize, delta: f64) -> f64 {
    delta / (b as f64 * k as f64 * depth(n, k, b).max(1) as f64)
}

/// Closed-form total rows: `(R + 1)` count sketches at the per-level target.
pub fn closed_form_rows(n: usize, k: usize, b: usize, delta: f64, consts: PpqConstants) -> usize {
    (depth(n, k, b) + 1) * consts.rows(k, level_delta(n, k, b, delta))
}

/// `b = max(2, round((k log2(n / delta))^gamma))`.
pub fn choose_branching(n: usize, k: usize, delta: f64, gamma: f64) -> Result<usize> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("gamma = {gamma} must lie in (0, 1]")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta = {delta} must lie in (0, 1)")));
    }
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let base = k as f64 * (n as f64 / delta).log2();
    Ok((base.powf(gamma).round() as usize).max(2))
}

#[derive(Clone, Debug)]
pub struct BTreeSchema {
    n: usize,
    k: usize,
    b: usize,
    delta: f64,
    seed: u64,
    widths: Vec<usize>,
    levels: Vec<PpqSchema<IntervalPartition>>,
}

/// Measured bits, one block per level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BTreeBits {
    pub levels: Vec<PpqBits>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BTreeDecode {
    pub support: BTreeSet<usize>,
    /// Survivors per level, root first.
    pub level_sizes: Vec<usize>,
    pub stats: DecodeStats,
}

impl BTreeSchema {
    pub fn build(
        n: usize,
        k: usize,
        b: usize,
        delta: f64,
        consts: PpqConstants,
        seed: u64,
    ) -> Result<Self> {
        if b < 2 || b > n.max(2) {
            return Err(invalid(format!("branching factor b = {b} must lie in 2..=n")));
        }
        if k == 0 || k > n {
            return Err(invalid(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("delta = {delta} must lie in (0, 1)")));
        }
        let widths = level_widths(n, k, b);
        let per_level = level_delta(n, k, b, delta);
        let src = RandomSource::new(seed);
        let levels = widths
            .iter()
            .enumerate()
            .map(|(r, &w)| {
                let part = IntervalPartition::new(n, w)?;
                PpqSchema::build(part, k, per_level, consts, src.derive(&[r as u64]).seed())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            k,
            b,
            delta,
            seed,
            widths,
            levels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn branching(&self) -> usize {
        self.b
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    /// `R`: levels below the root.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }
    pub fn widths(&self) -> &[usize] {
        &self.widths
    }
    pub fn level(&self, r: usize) -> &PpqSchema<IntervalPartition> {
        &self.levels[r]
    }
    pub fn levels(&self) -> &[PpqSchema<IntervalPartition>] {
        &self.levels
    }
    pub fn level_parts(&self, r: usize) -> u64 {
        self.levels[r].partition().part_count()
    }
    pub fn rows(&self) -> usize {
        self.levels.iter().map(|l| l.rows()).sum()
    }
    pub fn cap(&self) -> usize {
        self.levels[0].cap()
    }

    /// Worst-case point queries of one decode: `T_0 + b c k R`.
    pub fn query_bound(&self) -> u64 {
        self.level_parts(0) + (self.b * self.cap() * self.depth()) as u64
    }

    /// Level-`r` parts inside level-`(r-1)` part `p`.
    pub fn children(&self, r: usize, p: u64) -> std::ops::Range<u64> {
        let ratio = (self.widths[r - 1] / self.widths[r]) as u64;
        let end = ((p + 1) * ratio).min(self.level_parts(r));
        (p * ratio).min(end)..end
    }

    pub fn measure(&self, x: &Signal) -> Result<BTreeBits> {
        if x.dim() != self.n {
            return Err(invalid(format!(
                "signal has dimension {}, schema expects {}",
                x.dim(),
                self.n
            )));
        }
        let levels = self
            .levels
            .iter()
            .map(|l| l.measure(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(BTreeBits { levels })
    }

    pub fn decode(&self, bits: &BTreeBits) -> Result<BTreeDecode> {
        if bits.levels.len() != self.levels.len() {
            return Err(invalid(format!(
                "{} levels of bits for a {}-level tree",
                bits.levels.len(),
                self.levels.len()
            )));
        }
        let mut stats = DecodeStats::default();
        let mut current: Vec<u64> = self.levels[0]
            .decode(&bits.levels[0], None, &mut stats)?
            .into_iter()
            .map(|h| h.part)
            .collect();
        let mut level_sizes = vec![current.len()];
        for r in 1..self.levels.len() {
            let mut candidates: Vec<u64> = current
                .iter()
                .flat_map(|&p| self.children(r, p))
                .collect();
            candidates.sort_unstable();
            current = self.levels[r]
                .decode(&bits.levels[r], Some(&candidates), &mut stats)?
                .into_iter()
                .map(|h| h.part)
                .collect();
            level_sizes.push(current.len());
        }
        let bottom = self.levels.last().expect("at least one level").partition();
        let support = current
            .into_iter()
            .flat_map(|p| bottom.span(p))
            .collect();
        Ok(BTreeDecode {
            support,
            level_sizes,
            stats,
        })
    }
}

/// Builds the schema and measures `x` in one step.
pub fn build_measure(
    x: &Signal,
    k: usize,
    b: usize,
    delta: f64,
    consts: PpqConstants,
    seed: u64,
) -> Result<(BTreeSchema, BTreeBits)> {
    let schema = BTreeSchema::build(x.dim(), k, b, delta, consts, seed)?;
    let bits = schema.measure(x)?;
    Ok((schema, bits))
}
