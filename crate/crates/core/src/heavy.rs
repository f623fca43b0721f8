//! Heavy hitters for arbitrary sparsity by hashing into buckets.
//!
//! When `k < C' log2 n` the expander sketch runs directly. Otherwise every
//! coordinate is hashed into one of `z = ceil(C'' k / log2 n)` buckets and
//! each bucket gets its own expander sketch with sparsity `floor(C' log2 n)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::expander::{log2n, Diagnostics, Domain, ExpanderBits, ExpanderParams, ExpanderSchema};
use crate::model::{tail_stats, Signal};
use crate::ppq::DecodeStats;
use crate::seeded::{HashFamily, RandomSource};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyParams {
    /// Bucket count per `k / log2 n` (`C''`).
    pub bucket_factor: f64,
    /// When set, building fails if `rows > row_budget * k * log2 n`.
    pub row_budget: Option<f64>,
    /// Per-bucket sketch parameters; `sparsity_factor` is `C'`.
    pub expander: ExpanderParams,
}

impl Default for HeavyParams {
    fn default() -> Self {
        Self {
            bucket_factor: 1.0,
            row_budget: None,
            expander: ExpanderParams::default(),
        }
    }
}

/// Bucket count and per-bucket sparsity for `(n, k)`.
pub fn bucket_layout(n: usize, k: usize, params: &HeavyParams) -> (usize, usize) {
    let lg = log2n(n);
    let budget = params.expander.sparsity_factor * lg;
    if (k as f64) < budget {
        (1, k)
    } else {
        let z = ((params.bucket_factor * k as f64 / lg).ceil() as usize).max(1);
        (z, (budget.floor() as usize).max(1))
    }
}

#[derive(Debug)]
pub struct BucketingSchema {
    n: usize,
    k: usize,
    seed: u64,
    params: HeavyParams,
    hash: HashFamily,
    buckets: Vec<ExpanderSchema>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeavyBits {
    pub buckets: Vec<ExpanderBits>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeavyHitters {
    /// Returned indices, sorted.
    pub support: Vec<usize>,
    /// `(index, score)` in the order they survived the cap.
    pub ranked: Vec<(usize, usize)>,
    pub stats: DecodeStats,
    pub diagnostics: Vec<Diagnostics>,
}

impl BucketingSchema {
    pub fn build(n: usize, k: usize, params: HeavyParams, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("sparsity k must be positive"));
        }
        if !(params.bucket_factor > 0.0) {
            return Err(invalid("bucket factor must be positive"));
        }
        let (z, kb) = bucket_layout(n, k, &params);
        let src = RandomSource::new(seed);
        let hash = HashFamily::new(src.derive(&[0x6275_636b]).seed(), n as u64, z as u64);
        let buckets = (0..z)
            .map(|j| {
                let domain = if z == 1 {
                    Domain::All
                } else {
                    Domain::Bucket {
                        hash,
                        bucket: j as u64,
                    }
                };
                ExpanderSchema::build_on(n, kb, params.expander, src.derive(&[j as u64]).seed(), domain)
            })
            .collect::<Result<Vec<_>>>()?;
        let schema = Self {
            n,
            k,
            seed,
            params,
            hash,
            buckets,
        };
        if let Some(budget) = params.row_budget {
            let c = schema.row_constant();
            if c > budget {
                return Err(invalid(format!(
                    "{} rows is {c:.1} k log2 n, over the budget {budget}",
                    schema.rows()
                )));
            }
        }
        Ok(schema)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn params(&self) -> &HeavyParams {
        &self.params
    }
    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }
    pub fn buckets(&self) -> &[ExpanderSchema] {
        &self.buckets
    }

    /// `g(i)`.
    pub fn bucket_of(&self, i: usize) -> usize {
        if self.buckets.len() == 1 {
            0
        } else {
            self.hash.hash(i as u64) as usize
        }
    }

    pub fn rows(&self) -> usize {
        self.buckets.iter().map(|b| b.rows()).sum()
    }

    /// `C` in `rows = C k log2 n`.
    pub fn row_constant(&self) -> f64 {
        self.rows() as f64 / (self.k as f64 * log2n(self.n))
    }

    pub fn cap(&self) -> usize {
        self.params.expander.ppq.cap(self.k)
    }

    pub fn measure(&self, x: &Signal) -> Result<HeavyBits> {
        let buckets = self
            .buckets
            .iter()
            .map(|b| b.measure(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(HeavyBits { buckets })
    }

    /// Union of per-bucket recoveries, capped at `c k`. Under the cap,
    /// candidates are taken by rank within their bucket, then by score.
    pub fn decode(&self, bits: &HeavyBits) -> Result<HeavyHitters> {
        if bits.buckets.len() != self.buckets.len() {
            return Err(invalid(format!(
                "{} bucket blocks for a {}-bucket schema",
                bits.buckets.len(),
                self.buckets.len()
            )));
        }
        let mut out = HeavyHitters::default();
        let mut pool = Vec::new();
        for (schema, b) in self.buckets.iter().zip(&bits.buckets) {
            let rec = schema.recover(b)?;
            out.stats.absorb(rec.stats);
            out.diagnostics.push(rec.diagnostics);
            for (rank, &(i, score)) in rec.ranked.iter().enumerate() {
                pool.push((rank, score, i));
            }
        }
        pool.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        pool.truncate(self.cap());
        out.ranked = pool.iter().map(|&(_, score, i)| (i, score)).collect();
        out.support = pool.iter().map(|&(_, _, i)| i).collect();
        out.support.sort_unstable();
        Ok(out)
    }
}

/// One sub-signal per bucket, each in original coordinates; they sum to `x`.
pub fn bucket_split(x: &Signal, schema: &BucketingSchema) -> Result<Vec<Signal>> {
    if x.dim() != schema.n {
        return Err(invalid(format!(
            "signal has dimension {}, schema expects {}",
            x.dim(),
            schema.n
        )));
    }
    let mut parts = vec![Vec::new(); schema.bucket_count()];
    for (i, v) in x.nonzeros() {
        parts[schema.bucket_of(i)].push((i, v));
    }
    parts
        .into_iter()
        .map(|entries| Signal::from_sparse(schema.n, &entries))
        .collect()
}

/// Builds, measures and decodes in one call.
pub fn one_bit_heavy_hitters(
    x: &Signal,
    k: usize,
    params: HeavyParams,
    seed: u64,
) -> Result<(BucketingSchema, HeavyHitters)> {
    let schema = BucketingSchema::build(x.dim(), k, params, seed)?;
    let bits = schema.measure(x)?;
    let hits = schema.decode(&bits)?;
    Ok((schema, hits))
}

/// Per-heavy-coordinate audit of the bucketing reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct HeavinessCheck {
    pub index: usize,
    pub bucket: usize,
    /// At most `k_b` heavy coordinates share the bucket and the bucket's
    /// own tail is at most `(k_b / k) * ||x_{-k}||^2`.
    pub premise: bool,
    /// `i` is a `1/k_b` heavy hitter of its bucket's sub-signal.
    pub heavy_in_bucket: bool,
}

/// Evaluates both sides of the reduction for every heavy coordinate of `x`.
pub fn heaviness_audit(x: &Signal, schema: &BucketingSchema) -> Result<Vec<HeavinessCheck>> {
    let kb = schema.buckets[0].k();
    let whole = tail_stats(x, schema.k)?;
    let subs = bucket_split(x, schema)?;
    let sub_stats = subs
        .iter()
        .map(|s| tail_stats(s, kb))
        .collect::<Result<Vec<_>>>()?;
    let mut heavy_per_bucket = vec![0usize; subs.len()];
    for &i in &whole.heavy {
        heavy_per_bucket[schema.bucket_of(i)] += 1;
    }
    Ok(whole
        .heavy
        .iter()
        .map(|&i| {
            let j = schema.bucket_of(i);
            let premise = heavy_per_bucket[j] <= kb
                && sub_stats[j].tail_sq <= kb as f64 / schema.k as f64 * whole.tail_sq;
            HeavinessCheck {
                index: i,
                bucket: j,
                premise,
                heavy_in_bucket: sub_stats[j].heavy.contains(&i),
            }
        })
        .collect())
}

/// Indices of `H(x, k)` missing from `found`.
pub fn missed_heavy(x: &Signal, k: usize, found: &[usize]) -> Result<BTreeSet<usize>> {
    let found: BTreeSet<usize> = found.iter().copied().collect();
    Ok(tail_stats(x, k)?.heavy.difference(&found).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::signals::{gen_signal, SignalModel};

    #[test]
    fn layout_skips_bucketing_below_budget() {
        let p = HeavyParams::default();
        assert_eq!(bucket_layout(1 << 16, 4, &p), (1, 4));
        assert_eq!(bucket_layout(1 << 16, 16, &p), (1, 16));
        assert_eq!(bucket_layout(1 << 16, 64, &p), (4, 16));
        assert_eq!(bucket_layout(1 << 12, 32, &p), (3, 12));
    }

    #[test]
    fn single_bucket_split_is_identity() {
        let s = BucketingSchema::build(256, 2, HeavyParams::default(), 3).unwrap();
        assert_eq!(s.bucket_count(), 1);
        let x = gen_signal(SignalModel::DirichletFlat, 256, 2, &RandomSource::new(1)).unwrap();
        assert_eq!(bucket_split(&x, &s).unwrap(), vec![x]);
    }

    #[test]
    fn split_preserves_energy_and_sum() {
        let s = BucketingSchema::build(1 << 12, 32, HeavyParams::default(), 8).unwrap();
        assert_eq!(s.bucket_count(), 3);
        let x = gen_signal(SignalModel::DirichletFlat, 1 << 12, 4, &RandomSource::new(2)).unwrap();
        let subs = bucket_split(&x, &s).unwrap();
        let energy: f64 = subs.iter().map(|v| v.norm_sq()).sum();
        assert!((energy - x.norm_sq()).abs() < 1e-12);
        for i in 0..x.dim() {
            let sum: f64 = subs.iter().map(|v| v.get(i)).sum();
            assert_eq!(sum, x.get(i));
            assert_eq!(subs.iter().filter(|v| v.get(i) != 0.0).count(), usize::from(x.get(i) != 0.0));
        }
    }

    #[test]
    fn bucket_loads_stay_below_log_n() {
        // C'' = 2: 64 planted coordinates over 8 buckets, mean load 8, limit 16.
        let n = 1 << 16;
        let params = HeavyParams {
            bucket_factor: 2.0,
            ..HeavyParams::default()
        };
        let mut ok = 0;
        for t in 0..200u64 {
            let hash = HashFamily::new(RandomSource::new(t).derive(&[0x6275_636b]).seed(), n as u64, 8);
            let x = gen_signal(SignalModel::ExactSparse, n, 64, &RandomSource::new(1000 + t)).unwrap();
            let mut load = [0usize; 8];
            for i in x.support() {
                load[hash.hash(i as u64) as usize] += 1;
            }
            ok += usize::from(load.iter().all(|&l| l <= 16));
        }
        assert_eq!(bucket_layout(n, 64, &params).0, 8);
        assert!(ok >= 190, "{ok}/200");
    }

    #[test]
    fn zero_signal_gives_empty_set() {
        let s = BucketingSchema::build(1 << 12, 32, HeavyParams::default(), 4).unwrap();
        let hits = s.decode(&s.measure(&Signal::zeros(1 << 12)).unwrap()).unwrap();
        assert!(hits.support.is_empty());
    }

    #[test]
    fn bucketed_recovery_of_sparse_signals() {
        let n = 1 << 12;
        let k = 32;
        let mut full = 0;
        for t in 0..6u64 {
            let x = gen_signal(SignalModel::ExactSparse, n, k, &RandomSource::new(t)).unwrap();
            let (schema, hits) = one_bit_heavy_hitters(&x, k, HeavyParams::default(), 50 + t).unwrap();
            assert_eq!(schema.bucket_count(), 3);
            assert!(hits.support.len() <= schema.cap());
            full += usize::from(missed_heavy(&x, k, &hits.support).unwrap().is_empty());
        }
        assert!(full >= 5, "{full}/6");
    }

    #[test]
    fn audit_premise_implies_heaviness() {
        let n = 1 << 12;
        let s = BucketingSchema::build(n, 32, HeavyParams::default(), 9).unwrap();
        let mut premises = 0;
        for t in 0..50u64 {
            let model = SignalModel::SparsePlusTail { tail: 0.3 };
            let x = gen_signal(model, n, 32, &RandomSource::new(t)).unwrap();
            for c in heaviness_audit(&x, &s).unwrap() {
                if c.premise {
                    premises += 1;
                    assert!(c.heavy_in_bucket, "{c:?}");
                }
            }
        }
        assert!(premises > 0);
    }

    #[test]
    fn row_budget_is_enforced() {
        let params = HeavyParams {
            row_budget: Some(1.0),
            ..HeavyParams::default()
        };
        assert!(BucketingSchema::build(1 << 10, 2, params, 1).is_err());
    }
}
