//! Layered sketch for small sparsity `k = O(log n)`.
//!
//! Each coordinate `i` is encoded with a chunked code; layer `j` carries
//! chunk `j` inside the name string `m_{i,j}`, which also records the
//! coordinate's short hashes in the neighboring layers of a constant-degree
//! connected graph. Each layer partitions `[n]` by name and gets a count
//! sketch (to list heavy names) and a point-query sketch (to filter them).
//! Decoding links vertices of adjacent layers whose names point at each
//! other, and decodes every linked component back to an index.

mod code;
mod gf;
mod naming;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use self::code::{ChunkCode, CodeShape};
pub use self::gf::Gf;
pub use self::naming::{circulant, is_connected, Naming};
use crate::error::{invalid, Result};
use crate::model::Signal;
use crate::partition::Partition;
use crate::ppq::{DecodeStats, PpqBits, PpqConstants, PpqSchema};
use crate::seeded::{HashFamily, RandomSource};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpanderParams {
    /// Layer count `s`; defaults to `max(4, ceil(log2 n / log2 log2 n))`.
    pub layers: Option<usize>,
    /// Degree `d` of the circulant layer graph (clamped to `s - 1`).
    pub degree: usize,
    /// Fraction `e0` of chunks the code corrects.
    pub error_fraction: f64,
    /// Bits of each name hash; defaults to the widest that lets names fit in
    /// 64 bits, which is at least `ceil(log2((log2 n)^3))` at desk scale.
    pub hash_bits: Option<u32>,
    /// Count-sketch exponent `C0`: per-layer failure `T^-C0` over `T` names.
    pub count_exponent: f64,
    /// Point-query failure per layer is `(log2 n)^-point_exponent`.
    pub point_exponent: f64,
    /// Largest admissible sparsity per `log2 n` (`C'`).
    pub sparsity_factor: f64,
    pub ppq: PpqConstants,
}

impl Default for ExpanderParams {
    fn default() -> Self {
        Self {
            layers: None,
            degree: 4,
            error_fraction: 0.25,
            hash_bits: None,
            count_exponent: 1.0,
            point_exponent: 2.0,
            sparsity_factor: 1.0,
            ppq: PpqConstants::default(),
        }
    }
}

pub(crate) fn log2n(n: usize) -> f64 {
    (n.max(2) as f64).log2()
}

/// Layer count, chunk code and name-hash width for dimension `n`.
pub fn derive_layout(n: usize, params: &ExpanderParams) -> Result<(ChunkCode, Vec<Vec<usize>>, u32)> {
    let lg = log2n(n);
    let message_bits = (usize::BITS - (n.max(2) - 1).leading_zeros()).max(1);
    let s = params
        .layers
        .unwrap_or_else(|| ((lg / lg.log2().max(1.0)).ceil() as usize).max(4));
    let code = ChunkCode::new(message_bits, s, params.error_fraction)?;
    let degree = params.degree.min(s - 1);
    if degree == 0 {
        return Err(invalid("layer graph needs positive degree"));
    }
    let graph = circulant(s, degree);
    let degree = graph[0].len() as u32;
    let fit = (64 - code.chunk_bits()) / (degree + 1);
    let hash_bits = match params.hash_bits {
        Some(b) => b,
        None => fit.max(1),
    };
    Ok((code, graph, hash_bits))
}

/// Which coordinates a sketch covers.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    All,
    /// Coordinates `i` with `g(i) = bucket`.
    Bucket { hash: HashFamily, bucket: u64 },
}

impl Domain {
    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        match self {
            Domain::All => true,
            Domain::Bucket { hash, bucket } => hash.hash(i as u64) == *bucket,
        }
    }
}

/// The level sets of `i -> m_{i,j}` over the domain. Parts are the names
/// realized by some coordinate.
#[derive(Debug)]
pub struct NamePartition {
    naming: Arc<Naming>,
    layer: usize,
    domain: Domain,
    realized: Vec<u64>,
}

impl NamePartition {
    pub fn layer(&self) -> usize {
        self.layer
    }
}

impl Partition for NamePartition {
    fn dim(&self) -> usize {
        self.naming.n()
    }
    fn part_of(&self, i: usize) -> Option<u64> {
        (i < self.naming.n() && self.domain.contains(i)).then(|| self.naming.name(i, self.layer))
    }
    fn part_count(&self) -> u64 {
        self.realized.len() as u64
    }
    fn parts(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        Box::new(self.realized.iter().copied())
    }
    fn contains_part(&self, part: u64) -> bool {
        self.realized.binary_search(&part).is_ok()
    }
}

/// One layer: count sketch `Phi_j` and point-query sketch `Z_j` over the
/// same name partition.
#[derive(Debug)]
pub struct Layer {
    pub partition: Arc<NamePartition>,
    pub count_sketch: PpqSchema<Arc<NamePartition>>,
    pub point_query: PpqSchema<Arc<NamePartition>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerBits {
    pub count_sketch: PpqBits,
    pub point_query: PpqBits,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpanderBits {
    pub layers: Vec<LayerBits>,
}

/// A surviving `(layer, name)` pair with its point-query good count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub layer: usize,
    pub name: u64,
    pub score: usize,
}

/// Decoded candidates: index with accumulated score, best first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Recovery {
    pub ranked: Vec<(usize, usize)>,
    pub stats: DecodeStats,
    pub diagnostics: Diagnostics,
}

impl Recovery {
    pub fn support(&self) -> BTreeSet<usize> {
        self.ranked.iter().map(|&(i, _)| i).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub layer_sizes: Vec<usize>,
    pub components: usize,
    pub decode_failures: usize,
    pub verify_failures: usize,
}

#[derive(Debug)]
pub struct ExpanderSchema {
    n: usize,
    k: usize,
    seed: u64,
    params: ExpanderParams,
    naming: Arc<Naming>,
    layers: Vec<Layer>,
    domain: Domain,
}

impl ExpanderSchema {
    pub fn build(n: usize, k: usize, params: ExpanderParams, seed: u64) -> Result<Self> {
        Self::build_on(n, k, params, seed, Domain::All)
    }

    /// Builds the sketch over the coordinates of `domain` only.
    pub fn build_on(
        n: usize,
        k: usize,
        params: ExpanderParams,
        seed: u64,
        domain: Domain,
    ) -> Result<Self> {
        if n < 2 {
            return Err(invalid("dimension must be at least 2"));
        }
        if k == 0 {
            return Err(invalid("sparsity k must be positive"));
        }
        let limit = params.sparsity_factor * log2n(n);
        if k as f64 > limit {
            return Err(invalid(format!(
                "k = {k} exceeds C' log2 n = {limit:.1}; reduce sparsity by bucketing first"
            )));
        }
        let (code, graph, hash_bits) = derive_layout(n, &params)?;
        let src = RandomSource::new(seed);
        let naming = Arc::new(Naming::new(n, code, graph, hash_bits, &src.derive(&[1]))?);
        let s = naming.layers();

        let mut realized = vec![Vec::new(); s];
        for i in (0..n).filter(|&i| domain.contains(i)) {
            for (j, name) in naming.names(i).into_iter().enumerate() {
                realized[j].push(name);
            }
        }
        let point_delta = log2n(n).powf(-params.point_exponent).min(0.5);
        let layers = realized
            .into_iter()
            .enumerate()
            .map(|(j, mut names)| {
                names.sort_unstable();
                names.dedup();
                let partition = Arc::new(NamePartition {
                    naming: naming.clone(),
                    layer: j,
                    domain: domain.clone(),
                    realized: names,
                });
                let layer_src = src.derive(&[2, j as u64]);
                let count_sketch = PpqSchema::count_sketch(
                    partition.clone(),
                    k,
                    params.count_exponent,
                    params.ppq,
                    layer_src.derive(&[0]).seed(),
                )?;
                let point_query = PpqSchema::build(
                    partition.clone(),
                    k,
                    point_delta,
                    params.ppq,
                    layer_src.derive(&[1]).seed(),
                )?;
                Ok(Layer {
                    partition,
                    count_sketch,
                    point_query,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            k,
            seed,
            params,
            naming,
            layers,
            domain,
        })
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
    pub fn params(&self) -> &ExpanderParams {
        &self.params
    }
    pub fn naming(&self) -> &Naming {
        &self.naming
    }
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }
    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn cap(&self) -> usize {
        self.params.ppq.cap(self.k)
    }
    pub fn rows(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.count_sketch.rows() + l.point_query.rows())
            .sum()
    }

    /// `m_{i,j}`.
    pub fn make_name(&self, i: usize, j: usize) -> u64 {
        self.naming.name(i, j)
    }

    /// Layers a recovered index must be confirmed in: `ceil((1 - e0) s)`.
    pub fn required_matches(&self) -> usize {
        let s = self.naming.layers() as f64;
        ((1.0 - self.params.error_fraction) * s - 1e-9).ceil() as usize
    }

    pub fn measure(&self, x: &Signal) -> Result<ExpanderBits> {
        if x.dim() != self.n {
            return Err(invalid(format!(
                "signal has dimension {}, schema expects {}",
                x.dim(),
                self.n
            )));
        }
        let layers = self
            .layers
            .iter()
            .map(|l| {
                Ok(LayerBits {
                    count_sketch: l.count_sketch.measure(x)?,
                    point_query: l.point_query.measure(x)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExpanderBits { layers })
    }

    /// Heavy names of layer `j`: count-sketch hits with a unique short name
    /// that also pass the point query, best `c k` by point-query good count.
    pub fn layer_decode(&self, j: usize, bits: &LayerBits, stats: &mut DecodeStats) -> Result<Vec<Vertex>> {
        let layer = &self.layers[j];
        let hits = layer.count_sketch.decode(&bits.count_sketch, None, stats)?;
        let mut short: HashMap<u64, usize> = HashMap::new();
        for h in &hits {
            *short.entry(self.naming.own_field(h.part)).or_default() += 1;
        }
        let mut out = Vec::new();
        for h in hits {
            if short[&self.naming.own_field(h.part)] > 1 {
                continue;
            }
            let q = layer.point_query.query(&bits.point_query, h.part, stats)?;
            if q.accepted {
                out.push(Vertex {
                    layer: j,
                    name: h.part,
                    score: q.good,
                });
            }
        }
        out.sort_by(|a, b| b.score.cmp(&a.score).then(a.name.cmp(&b.name)));
        out.truncate(self.cap());
        Ok(out)
    }

    /// Links layer vertices and decodes each linked component to an index.
    pub fn link_cluster_decode(&self, lists: &[Vec<Vertex>]) -> (Vec<(usize, usize)>, Diagnostics) {
        let graph = LinkGraph::build(&self.naming, lists);
        let mut diag = Diagnostics {
            layer_sizes: lists.iter().map(|l| l.len()).collect(),
            ..Diagnostics::default()
        };
        let s = self.naming.layers();
        let need = self.required_matches();
        let mut best: BTreeMap<usize, usize> = BTreeMap::new();
        for comp in graph.components() {
            let layers_hit: BTreeSet<usize> = comp.iter().map(|&v| graph.vertices[v].layer).collect();
            if layers_hit.len() < need {
                continue;
            }
            diag.components += 1;
            let mut slots: Vec<Option<u16>> = vec![None; s];
            for j in 0..s {
                let mut claims = comp.iter().filter(|&&v| graph.vertices[v].layer == j);
                if let (Some(&v), None) = (claims.next(), claims.next()) {
                    slots[j] = Some(self.naming.chunk_field(graph.vertices[v].name));
                }
            }
            let index = match self.naming.code().decode(&slots) {
                Ok(Some(i)) if (i as usize) < self.n && self.domain.contains(i as usize) => i as usize,
                _ => {
                    diag.decode_failures += 1;
                    continue;
                }
            };
            let names = self.naming.names(index);
            let matched: Vec<usize> = comp
                .iter()
                .copied()
                .filter(|&v| names[graph.vertices[v].layer] == graph.vertices[v].name)
                .collect();
            let matched_layers: BTreeSet<usize> =
                matched.iter().map(|&v| graph.vertices[v].layer).collect();
            if matched_layers.len() < need {
                diag.verify_failures += 1;
                continue;
            }
            let score = matched.iter().map(|&v| graph.vertices[v].score).sum();
            let slot = best.entry(index).or_default();
            *slot = (*slot).max(score);
        }
        let mut ranked: Vec<(usize, usize)> = best.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(self.cap());
        (ranked, diag)
    }

    /// Full decode: every layer, then linking.
    pub fn recover(&self, bits: &ExpanderBits) -> Result<Recovery> {
        if bits.layers.len() != self.layers.len() {
            return Err(invalid(format!(
                "{} layers of bits for a {}-layer sketch",
                bits.layers.len(),
                self.layers.len()
            )));
        }
        let mut stats = DecodeStats::default();
        let lists = bits
            .layers
            .iter()
            .enumerate()
            .map(|(j, b)| self.layer_decode(j, b, &mut stats))
            .collect::<Result<Vec<_>>>()?;
        let (ranked, diagnostics) = self.link_cluster_decode(&lists);
        Ok(Recovery {
            ranked,
            stats,
            diagnostics,
        })
    }
}

/// Vertices from all layers and the edges both endpoints suggest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(usize, usize)>,
}

impl LinkGraph {
    pub fn build(naming: &Naming, lists: &[Vec<Vertex>]) -> LinkGraph {
        let vertices: Vec<Vertex> = lists.iter().flatten().copied().collect();
        let mut by_short: HashMap<(usize, u64), Vec<usize>> = HashMap::new();
        for (v, vx) in vertices.iter().enumerate() {
            by_short
                .entry((vx.layer, naming.own_field(vx.name)))
                .or_default()
                .push(v);
        }
        let mut edges = Vec::new();
        for (u, ux) in vertices.iter().enumerate() {
            for (a, &other) in naming.neighbors(ux.layer).iter().enumerate() {
                if other < ux.layer {
                    continue;
                }
                let want = naming.neighbor_field(ux.name, a);
                let back = naming
                    .neighbors(other)
                    .iter()
                    .position(|&l| l == ux.layer)
                    .expect("layer graph is undirected");
                let own = naming.own_field(ux.name);
                for &v in by_short.get(&(other, want)).into_iter().flatten() {
                    if naming.neighbor_field(vertices[v].name, back) == own {
                        edges.push((u, v));
                    }
                }
            }
        }
        LinkGraph { vertices, edges }
    }

    /// Connected components as vertex-id lists, in order of first vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for &(u, v) in &self.edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru.max(rv)] = ru.min(rv);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..self.vertices.len() {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        groups.into_values().collect()
    }
}

/// Builds, measures and recovers in one call.
pub fn small_sparsity_recover(
    x: &Signal,
    k: usize,
    params: ExpanderParams,
    seed: u64,
) -> Result<(ExpanderSchema, Recovery)> {
    let schema = ExpanderSchema::build(x.dim(), k, params, seed)?;
    let bits = schema.measure(x)?;
    let rec = schema.recover(&bits)?;
    Ok((schema, rec))
}
