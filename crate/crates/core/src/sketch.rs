//! One entry point over every scheme: a serializable description, the built
//! sketch, and measurement as a flat list of bit blocks.

use serde::{Deserialize, Serialize};

use crate::bits::SignBits;
use crate::btree::{BTreeBits, BTreeSchema};
use crate::error::{invalid, Result};
use crate::expander::{ExpanderBits, ExpanderParams, ExpanderSchema, LayerBits};
use crate::heavy::{BucketingSchema, HeavyBits, HeavyParams};
use crate::model::{Signal, SparseEstimate};
use crate::partition::IntervalPartition;
use crate::ppq::{DecodeStats, PpqBits, PpqConstants, PpqSchema};
use crate::pv::{PipelineBits, PipelineParams, PipelineSchema};

/// Everything needed to rebuild a sketch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum SchemeSpec {
    /// Point queries over `parts` contiguous intervals.
    Ppq {
        n: usize,
        parts: usize,
        k: usize,
        delta: f64,
        consts: PpqConstants,
        seed: u64,
    },
    /// Count sketch over `parts` contiguous intervals.
    Ppcs {
        n: usize,
        parts: usize,
        k: usize,
        count_exponent: f64,
        consts: PpqConstants,
        seed: u64,
    },
    Btree {
        n: usize,
        k: usize,
        b: usize,
        delta: f64,
        consts: PpqConstants,
        seed: u64,
    },
    Expander {
        n: usize,
        k: usize,
        params: ExpanderParams,
        seed: u64,
    },
    HeavyHitters {
        n: usize,
        k: usize,
        params: HeavyParams,
        seed: u64,
    },
    Pipeline {
        n: usize,
        k: usize,
        delta: f64,
        params: PipelineParams,
        seed: u64,
    },
}

impl SchemeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeSpec::Ppq { .. } => "ppq",
            SchemeSpec::Ppcs { .. } => "ppcs",
            SchemeSpec::Btree { .. } => "btree",
            SchemeSpec::Expander { .. } => "expander",
            SchemeSpec::HeavyHitters { .. } => "heavy-hitters",
            SchemeSpec::Pipeline { .. } => "pipeline",
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            SchemeSpec::Ppq { n, .. }
            | SchemeSpec::Ppcs { n, .. }
            | SchemeSpec::Btree { n, .. }
            | SchemeSpec::Expander { n, .. }
            | SchemeSpec::HeavyHitters { n, .. }
            | SchemeSpec::Pipeline { n, .. } => n,
        }
    }

    pub fn k(&self) -> usize {
        match *self {
            SchemeSpec::Ppq { k, .. }
            | SchemeSpec::Ppcs { k, .. }
            | SchemeSpec::Btree { k, .. }
            | SchemeSpec::Expander { k, .. }
            | SchemeSpec::HeavyHitters { k, .. }
            | SchemeSpec::Pipeline { k, .. } => k,
        }
    }

    pub fn build(&self) -> Result<Sketch> {
        Ok(match *self {
            SchemeSpec::Ppq {
                n,
                parts,
                k,
                delta,
                consts,
                seed,
            } => Sketch::Ppq(PpqSchema::build(
                IntervalPartition::with_parts(n, parts)?,
                k,
                delta,
                consts,
                seed,
            )?),
            SchemeSpec::Ppcs {
                n,
                parts,
                k,
                count_exponent,
                consts,
                seed,
            } => Sketch::Ppcs(PpqSchema::count_sketch(
                IntervalPartition::with_parts(n, parts)?,
                k,
                count_exponent,
                consts,
                seed,
            )?),
            SchemeSpec::Btree {
                n,
                k,
                b,
                delta,
                consts,
                seed,
            } => Sketch::Btree(BTreeSchema::build(n, k, b, delta, consts, seed)?),
            SchemeSpec::Expander { n, k, params, seed } => {
                Sketch::Expander(ExpanderSchema::build(n, k, params, seed)?)
            }
            SchemeSpec::HeavyHitters { n, k, params, seed } => {
                Sketch::HeavyHitters(BucketingSchema::build(n, k, params, seed)?)
            }
            SchemeSpec::Pipeline {
                n,
                k,
                delta,
                params,
                seed,
            } => Sketch::Pipeline(PipelineSchema::build(n, k, delta, params, seed)?),
        })
    }
}

#[derive(Debug)]
pub enum Sketch {
    Ppq(PpqSchema<IntervalPartition>),
    Ppcs(PpqSchema<IntervalPartition>),
    Btree(BTreeSchema),
    Expander(ExpanderSchema),
    HeavyHitters(BucketingSchema),
    Pipeline(PipelineSchema),
}

/// Result of decoding, common to all schemes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    /// Accepted parts for `ppq` and `ppcs`, coordinates otherwise; sorted.
    pub support: Vec<u64>,
    /// Only the pipeline produces values.
    pub estimate: Option<SparseEstimate>,
    pub stats: DecodeStats,
    /// The pipeline found no heavy hitters and returned zero.
    pub empty_support: bool,
}

/// Shape of one bit block: total bits and, for point-query blocks, `(R, buckets)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    pub bits: usize,
    pub grid: Option<(usize, usize)>,
}

fn ppq_shape<P>(s: &PpqSchema<P>) -> BlockShape
where
    P: crate::partition::Partition,
{
    BlockShape {
        bits: s.rows(),
        grid: Some((s.repetitions(), s.buckets())),
    }
}

fn expander_shapes(s: &ExpanderSchema, out: &mut Vec<BlockShape>) {
    for l in s.layers() {
        out.push(ppq_shape(&l.count_sketch));
        out.push(ppq_shape(&l.point_query));
    }
}

fn expander_blocks(b: ExpanderBits, out: &mut Vec<SignBits>) {
    for l in b.layers {
        out.push(l.count_sketch.bits().clone());
        out.push(l.point_query.bits().clone());
    }
}

/// Consumes `2 s` blocks from the front of `it`.
fn expander_bits(
    s: &ExpanderSchema,
    it: &mut impl Iterator<Item = (SignBits, BlockShape)>,
) -> Result<ExpanderBits> {
    let mut layers = Vec::with_capacity(s.layers().len());
    for _ in s.layers() {
        let count_sketch = take_ppq(it)?;
        let point_query = take_ppq(it)?;
        layers.push(LayerBits {
            count_sketch,
            point_query,
        });
    }
    Ok(ExpanderBits { layers })
}

fn take_ppq(it: &mut impl Iterator<Item = (SignBits, BlockShape)>) -> Result<PpqBits> {
    let (bits, shape) = it.next().ok_or_else(|| invalid("too few bit blocks"))?;
    let (reps, buckets) = shape.grid.ok_or_else(|| invalid("expected a point-query block"))?;
    PpqBits::from_parts(bits, reps, buckets)
}

fn heavy_shapes(s: &BucketingSchema, out: &mut Vec<BlockShape>) {
    for b in s.buckets() {
        expander_shapes(b, out);
    }
}

impl Sketch {
    pub fn rows(&self) -> usize {
        self.block_shapes().iter().map(|b| b.bits).sum()
    }

    pub fn n(&self) -> usize {
        match self {
            Sketch::Ppq(s) | Sketch::Ppcs(s) => crate::partition::Partition::dim(s.partition()),
            Sketch::Btree(s) => s.n(),
            Sketch::Expander(s) => s.n(),
            Sketch::HeavyHitters(s) => s.n(),
            Sketch::Pipeline(s) => s.n(),
        }
    }

    /// Block layout in measurement order.
    pub fn block_shapes(&self) -> Vec<BlockShape> {
        let mut out = Vec::new();
        match self {
            Sketch::Ppq(s) | Sketch::Ppcs(s) => out.push(ppq_shape(s)),
            Sketch::Btree(s) => out.extend(s.levels().iter().map(ppq_shape)),
            Sketch::Expander(s) => expander_shapes(s, &mut out),
            Sketch::HeavyHitters(s) => heavy_shapes(s, &mut out),
            Sketch::Pipeline(s) => {
                heavy_shapes(s.heavy(), &mut out);
                out.push(BlockShape {
                    bits: s.gaussian().rows(),
                    grid: None,
                });
            }
        }
        out
    }

    pub fn measure(&self, x: &Signal) -> Result<Vec<SignBits>> {
        let mut out = Vec::new();
        match self {
            Sketch::Ppq(s) | Sketch::Ppcs(s) => out.push(s.measure(x)?.bits().clone()),
            Sketch::Btree(s) => {
                for l in s.measure(x)?.levels {
                    out.push(l.bits().clone());
                }
            }
            Sketch::Expander(s) => expander_blocks(s.measure(x)?, &mut out),
            Sketch::HeavyHitters(s) => {
                for b in s.measure(x)?.buckets {
                    expander_blocks(b, &mut out);
                }
            }
            Sketch::Pipeline(s) => {
                let bits = s.measure(x)?;
                for b in bits.heavy.buckets {
                    expander_blocks(b, &mut out);
                }
                out.push(bits.gaussian);
            }
        }
        Ok(out)
    }

    pub fn decode(&self, blocks: Vec<SignBits>) -> Result<Outcome> {
        let shapes = self.block_shapes();
        if blocks.len() != shapes.len() {
            return Err(invalid(format!(
                "{} bit blocks, sketch expects {}",
                blocks.len(),
                shapes.len()
            )));
        }
        for (i, (b, s)) in blocks.iter().zip(&shapes).enumerate() {
            if b.len() != s.bits {
                return Err(invalid(format!(
                    "block {i} holds {} bits, sketch expects {}",
                    b.len(),
                    s.bits
                )));
            }
        }
        let mut it = blocks.into_iter().zip(shapes);
        let mut out = Outcome::default();
        match self {
            Sketch::Ppq(s) => {
                let bits = take_ppq(&mut it)?;
                let parts: Vec<u64> = crate::partition::Partition::parts(s.partition()).collect();
                for part in parts {
                    if s.query(&bits, part, &mut out.stats)?.accepted {
                        out.support.push(part);
                    }
                }
            }
            Sketch::Ppcs(s) => {
                let bits = take_ppq(&mut it)?;
                let hits = s.decode(&bits, None, &mut out.stats)?;
                out.support = hits.iter().map(|h| h.part).collect();
            }
            Sketch::Btree(s) => {
                let levels = s
                    .levels()
                    .iter()
                    .map(|_| take_ppq(&mut it))
                    .collect::<Result<Vec<_>>>()?;
                let d = s.decode(&BTreeBits { levels })?;
                out.stats = d.stats;
                out.support = d.support.iter().map(|&i| i as u64).collect();
            }
            Sketch::Expander(s) => {
                let rec = s.recover(&expander_bits(s, &mut it)?)?;
                out.stats = rec.stats;
                out.support = rec.support().iter().map(|&i| i as u64).collect();
            }
            Sketch::HeavyHitters(s) => {
                let hits = s.decode(&heavy_bits(s, &mut it)?)?;
                out.stats = hits.stats;
                out.support = hits.support.iter().map(|&i| i as u64).collect();
            }
            Sketch::Pipeline(s) => {
                let heavy = heavy_bits(s.heavy(), &mut it)?;
                let (gaussian, _) = it.next().ok_or_else(|| invalid("missing gaussian block"))?;
                let d = s.decode(&PipelineBits { heavy, gaussian })?;
                out.stats = d.stats;
                out.support = d.support.iter().map(|&i| i as u64).collect();
                out.estimate = Some(d.estimate);
                out.empty_support = d.empty_support;
            }
        }
        out.support.sort_unstable();
        Ok(out)
    }
}

fn heavy_bits(
    s: &BucketingSchema,
    it: &mut impl Iterator<Item = (SignBits, BlockShape)>,
) -> Result<HeavyBits> {
    let buckets = s
        .buckets()
        .iter()
        .map(|b| expander_bits(b, it))
        .collect::<Result<Vec<_>>>()?;
    Ok(HeavyBits { buckets })
}
