//! Gaussian one-bit measurements, the convex recovery program, and the full
//! pipeline: heavy hitters first, then the program restricted to them.
//!
//! The program maximizes `<y, G_S z>` over `||z||_1 <= sqrt(k)` and
//! `||z||_2 <= 1`. Its maximizer is a normalized soft-thresholding of
//! `c = G_S^T y`, with the threshold found exactly from the sorted
//! magnitudes of `c`.

use serde::{Deserialize, Serialize};

use crate::bits::SignBits;
use crate::error::{invalid, Result};
use crate::heavy::{BucketingSchema, HeavyBits, HeavyParams};
use crate::model::{Signal, SparseEstimate};
use crate::ppq::DecodeStats;
use crate::seeded::RandomSource;

const NOISE: u64 = 0x6e_6f69_7365;

/// `G` in `R^{m x n}` with standard gaussian entries, plus pre-quantization
/// noise of standard deviation `sigma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSchema {
    m: usize,
    n: usize,
    seed: u64,
    sigma: f64,
}

impl GaussianSchema {
    pub fn new(m: usize, n: usize, seed: u64, sigma: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(invalid("gaussian schema needs m >= 1 and n >= 1"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("noise level {sigma} must be finite and nonnegative")));
        }
        Ok(Self { m, n, seed, sigma })
    }

    pub fn rows(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn entry(&self, r: usize, i: usize) -> f64 {
        RandomSource::new(self.seed).gaussian_at(&[r as u64, i as u64])
    }

    #[inline]
    pub fn noise(&self, r: usize) -> f64 {
        self.sigma * RandomSource::new(self.seed).gaussian_at(&[NOISE, r as u64])
    }
}

/// `y = sign(G x + v)`.
pub fn pv_measure(x: &Signal, schema: &GaussianSchema) -> Result<SignBits> {
    if x.dim() != schema.n {
        return Err(invalid(format!(
            "signal has dimension {}, schema expects {}",
            x.dim(),
            schema.n
        )));
    }
    let nz: Vec<(usize, f64)> = x.nonzeros().collect();
    Ok((0..schema.m)
        .map(|r| {
            let v: f64 = nz.iter().map(|&(i, xi)| schema.entry(r, i) * xi).sum();
            v + schema.noise(r) >= 0.0
        })
        .collect())
}

/// `c = G_S^T y`.
pub fn correlations(y: &SignBits, schema: &GaussianSchema, support: &[usize]) -> Result<Vec<f64>> {
    if y.len() != schema.m {
        return Err(invalid(format!("{} bits for {} rows", y.len(), schema.m)));
    }
    if let Some(&i) = support.iter().find(|&&i| i >= schema.n) {
        return Err(invalid(format!("column {i} out of range")));
    }
    let mut c = vec![0.0; support.len()];
    for r in 0..schema.m {
        let yr = y.value(r);
        for (cj, &i) in c.iter_mut().zip(support) {
            *cj += yr * schema.entry(r, i);
        }
    }
    Ok(c)
}

/// Maximizer of `<c, z>` over `||z||_1 <= radius`, `||z||_2 <= 1`.
pub fn solve_ball(c: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = c.iter().map(|v| v.abs()).sum();
    let l2 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if l2 == 0.0 {
        return vec![0.0; c.len()];
    }
    if l1 <= radius * l2 {
        return c.iter().map(|v| v / l2).collect();
    }
    let kk = radius * radius;
    let mut a: Vec<f64> = c.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    a.sort_by(|x, y| y.total_cmp(x));

    let top = a[0];
    let ties = a.iter().take_while(|&&v| v == top).count();
    if ties as f64 >= kk {
        // At least radius^2 tied maxima: spread the l1 budget over them.
        return c
            .iter()
            .map(|&v| if v.abs() == top { v.signum() * radius / ties as f64 } else { 0.0 })
            .collect();
    }

    // On the segment where exactly the j largest magnitudes survive, the
    // l1/l2 ratio of soft(c, lambda) equals `radius` at a root of a quadratic.
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut lambda = 0.0;
    for j in 1..=a.len() {
        s1 += a[j - 1];
        s2 += a[j - 1] * a[j - 1];
        let lo = a.get(j).copied().unwrap_or(0.0);
        let hi = a[j - 1];
        if lo == hi || (j as f64) <= kk {
            continue;
        }
        let jf = j as f64;
        let disc = (kk * (jf * s2 - s1 * s1) / (jf - kk)).max(0.0);
        let root = (s1 - disc.sqrt()) / jf;
        if root >= lo {
            lambda = root.min(hi);
            break;
        }
    }
    let soft: Vec<f64> = c.iter().map(|&v| v.signum() * (v.abs() - lambda).max(0.0)).collect();
    let norm = soft.iter().map(|v| v * v).sum::<f64>().sqrt();
    soft.iter().map(|v| v / norm).collect()
}

/// Solves the program over the columns `support`; returns `(index, value)`.
pub fn pv_solve(y: &SignBits, schema: &GaussianSchema, support: &[usize], k: usize) -> Result<Vec<(usize, f64)>> {
    if support.is_empty() {
        return Err(invalid("the support set is empty"));
    }
    let c = correlations(y, schema, support)?;
    let z = solve_ball(&c, (k as f64).sqrt());
    Ok(support.iter().copied().zip(z).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub heavy: HeavyParams,
    /// Gaussian rows; defaults to `ceil(gaussian_factor * k log2(n/k) / delta^2)`.
    pub gaussian_rows: Option<usize>,
    pub gaussian_factor: f64,
    pub sigma: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            heavy: HeavyParams::default(),
            gaussian_rows: None,
            gaussian_factor: 2.0,
            sigma: 0.0,
        }
    }
}

/// Default gaussian block size `ceil(factor * k log2(n/k) / delta^2)`.
pub fn default_gaussian_rows(n: usize, k: usize, delta: f64, factor: f64) -> usize {
    let ratio = (n as f64 / k as f64).max(2.0);
    ((factor * k as f64 * ratio.log2() / (delta * delta)).ceil() as usize).max(1)
}

/// Heavy-hitter rows stacked on gaussian rows.
#[derive(Debug)]
pub struct PipelineSchema {
    n: usize,
    k: usize,
    delta: f64,
    seed: u64,
    params: PipelineParams,
    heavy: BucketingSchema,
    gaussian: GaussianSchema,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineBits {
    pub heavy: HeavyBits,
    pub gaussian: SignBits,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineDecode {
    pub estimate: SparseEstimate,
    /// Heavy-hitter output `S`, sorted.
    pub support: Vec<usize>,
    pub stats: DecodeStats,
    /// Set when `S` came back empty and the estimate is zero by default.
    pub empty_support: bool,
}

impl PipelineSchema {
    pub fn build(n: usize, k: usize, delta: f64, params: PipelineParams, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("delta = {delta} must lie in (0, 1)")));
        }
        if k == 0 {
            return Err(invalid("sparsity k must be positive"));
        }
        let src = RandomSource::new(seed);
        let heavy = BucketingSchema::build(n, k, params.heavy, src.derive(&[0]).seed())?;
        let m = params
            .gaussian_rows
            .unwrap_or_else(|| default_gaussian_rows(n, k, delta, params.gaussian_factor));
        let gaussian = GaussianSchema::new(m, n, src.derive(&[1]).seed(), params.sigma)?;
        Ok(Self {
            n,
            k,
            delta,
            seed,
            params,
            heavy,
            gaussian,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn params(&self) -> &PipelineParams {
        &self.params
    }
    pub fn heavy(&self) -> &BucketingSchema {
        &self.heavy
    }
    pub fn gaussian(&self) -> &GaussianSchema {
        &self.gaussian
    }

    /// `(heavy-hitter rows, gaussian rows)`.
    pub fn block_rows(&self) -> (usize, usize) {
        (self.heavy.rows(), self.gaussian.rows())
    }

    pub fn rows(&self) -> usize {
        self.heavy.rows() + self.gaussian.rows()
    }

    pub fn measure(&self, x: &Signal) -> Result<PipelineBits> {
        Ok(PipelineBits {
            heavy: self.heavy.measure(x)?,
            gaussian: pv_measure(x, &self.gaussian)?,
        })
    }

    pub fn decode(&self, bits: &PipelineBits) -> Result<PipelineDecode> {
        let hits = self.heavy.decode(&bits.heavy)?;
        let mut stats = hits.stats;
        let cap = self.heavy.cap();
        if hits.support.is_empty() {
            return Ok(PipelineDecode {
                estimate: SparseEstimate::zero(cap),
                support: hits.support,
                stats,
                empty_support: true,
            });
        }
        let entries = pv_solve(&bits.gaussian, &self.gaussian, &hits.support, self.k)?;
        stats.bit_reads += self.gaussian.rows() as u64;
        let entries = entries.into_iter().filter(|&(_, v)| v != 0.0).collect();
        Ok(PipelineDecode {
            estimate: SparseEstimate::new(entries, cap)?,
            support: hits.support,
            stats,
            empty_support: false,
        })
    }
}

/// Builds, measures and decodes in one call.
pub fn pipeline_decode(
    x: &Signal,
    k: usize,
    delta: f64,
    params: PipelineParams,
    seed: u64,
) -> Result<(PipelineSchema, PipelineDecode)> {
    let schema = PipelineSchema::build(x.dim(), k, delta, params, seed)?;
    let bits = schema.measure(x)?;
    let out = schema.decode(&bits)?;
    Ok((schema, out))
}
