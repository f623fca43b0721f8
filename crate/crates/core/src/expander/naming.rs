//! Per-layer name strings `m_{i,j} = h_j(i) . enc(i)_j . h_{G_1(j)}(i) ... h_{G_d(j)}(i)`,
//! packed most-significant field first into a `u64`.

use super::code::ChunkCode;
use crate::error::{invalid, Result};
use crate::seeded::{HashFamily, RandomSource};

/// Circulant graph on `0..s` with offsets `+-1, +-2, ...` up to degree `d`;
/// neighbor lists are ascending and exclude the vertex itself.
pub fn circulant(s: usize, degree: usize) -> Vec<Vec<usize>> {
    (0..s)
        .map(|j| {
            let mut nb: Vec<usize> = (1..=degree.div_ceil(2))
                .flat_map(|off| [(j + off) % s, (j + s - off % s) % s])
                .filter(|&v| v != j)
                .collect();
            nb.sort_unstable();
            nb.dedup();
            nb.truncate(degree.min(s - 1));
            nb
        })
        .collect()
}

pub fn is_connected(graph: &[Vec<usize>]) -> bool {
    if graph.is_empty() {
        return true;
    }
    let mut seen = vec![false; graph.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &graph[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|b| b)
}

#[derive(Clone, Debug)]
pub struct Naming {
    n: usize,
    code: ChunkCode,
    hashes: Vec<HashFamily>,
    neighbors: Vec<Vec<usize>>,
    hash_bits: u32,
}

impl Naming {
    pub fn new(
        n: usize,
        code: ChunkCode,
        neighbors: Vec<Vec<usize>>,
        hash_bits: u32,
        src: &RandomSource,
    ) -> Result<Self> {
        let s = code.chunks();
        if neighbors.len() != s {
            return Err(invalid("expander graph must have one vertex per chunk"));
        }
        let degree = neighbors[0].len();
        if neighbors.iter().any(|nb| nb.len() != degree) {
            return Err(invalid("expander graph must be regular"));
        }
        if !is_connected(&neighbors) {
            return Err(invalid("expander graph must be connected"));
        }
        for (j, nb) in neighbors.iter().enumerate() {
            if nb.iter().any(|&v| !neighbors[v].contains(&j)) {
                return Err(invalid("expander graph must be undirected"));
            }
        }
        if hash_bits == 0 {
            return Err(invalid("name hashes need at least one bit"));
        }
        let total = hash_bits as u64 * (degree as u64 + 1) + code.chunk_bits() as u64;
        if total > 64 {
            return Err(invalid(format!("names of {total} bits do not fit in 64")));
        }
        let hashes = (0..s)
            .map(|j| HashFamily::new(src.derive(&[j as u64]).seed(), n as u64, 1 << hash_bits))
            .collect();
        Ok(Self {
            n,
            code,
            hashes,
            neighbors,
            hash_bits,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn code(&self) -> &ChunkCode {
        &self.code
    }
    pub fn layers(&self) -> usize {
        self.code.chunks()
    }
    pub fn degree(&self) -> usize {
        self.neighbors[0].len()
    }
    pub fn neighbors(&self, j: usize) -> &[usize] {
        &self.neighbors[j]
    }
    pub fn hash_bits(&self) -> u32 {
        self.hash_bits
    }
    pub fn name_bits(&self) -> u32 {
        self.hash_bits * (self.degree() as u32 + 1) + self.code.chunk_bits()
    }

    #[inline]
    pub fn layer_hash(&self, j: usize, i: usize) -> u64 {
        self.hashes[j].hash(i as u64)
    }

    fn pack(&self, j: usize, i: usize, chunk: u16) -> u64 {
        let hb = self.hash_bits;
        let mut name = self.layer_hash(j, i);
        name = (name << self.code.chunk_bits()) | chunk as u64;
        for &nb in &self.neighbors[j] {
            name = (name << hb) | self.layer_hash(nb, i);
        }
        name
    }

    /// `m_{i,j}`.
    pub fn name(&self, i: usize, j: usize) -> u64 {
        let chunk = self.code.encode(i as u64)[j];
        self.pack(j, i, chunk)
    }

    /// `m_{i,j}` for every layer `j`, sharing one encoding.
    pub fn names(&self, i: usize) -> Vec<u64> {
        let cw = self.code.encode(i as u64);
        (0..self.layers()).map(|j| self.pack(j, i, cw[j])).collect()
    }

    /// The own-hash field `h_j(i)`: the vertex's short name.
    pub fn own_field(&self, name: u64) -> u64 {
        name >> (self.code.chunk_bits() + self.hash_bits * self.degree() as u32)
    }

    pub fn chunk_field(&self, name: u64) -> u16 {
        let shift = self.hash_bits * self.degree() as u32;
        ((name >> shift) & ((1 << self.code.chunk_bits()) - 1)) as u16
    }

    /// Hash value this name records for its `a`-th neighbor layer.
    pub fn neighbor_field(&self, name: u64, a: usize) -> u64 {
        let shift = self.hash_bits * (self.degree() - 1 - a) as u32;
        (name >> shift) & ((1 << self.hash_bits) - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naming() -> Naming {
        let code = ChunkCode::new(16, 4, 0.25).unwrap();
        Naming::new(1 << 16, code, circulant(4, 4), 12, &RandomSource::new(8)).unwrap()
    }

    #[test]
    fn circulant_shapes() {
        assert_eq!(circulant(4, 4), vec![vec![1, 2, 3], vec![0, 2, 3], vec![0, 1, 3], vec![0, 1, 2]]);
        let g = circulant(9, 4);
        assert!(g.iter().all(|nb| nb.len() == 4));
        assert_eq!(g[0], vec![1, 2, 7, 8]);
        assert!(is_connected(&g));
        assert!(!is_connected(&[vec![1], vec![0], vec![3], vec![2]]));
    }

    #[test]
    fn fields_unpack() {
        let nm = naming();
        assert_eq!(nm.name_bits(), 12 * 4 + 8);
        for i in [0usize, 1, 777, 65535] {
            let cw = nm.code().encode(i as u64);
            for j in 0..4 {
                let name = nm.name(i, j);
                assert_eq!(nm.own_field(name), nm.layer_hash(j, i));
                assert_eq!(nm.chunk_field(name), cw[j]);
                for (a, &nb) in nm.neighbors(j).iter().enumerate() {
                    assert_eq!(nm.neighbor_field(name, a), nm.layer_hash(nb, i));
                }
                assert!(name >> nm.name_bits() == 0);
            }
            assert_eq!(nm.names(i), (0..4).map(|j| nm.name(i, j)).collect::<Vec<_>>());
        }
    }

    #[test]
    fn rejects_oversized_names() {
        let code = ChunkCode::new(16, 4, 0.25).unwrap();
        assert!(Naming::new(1 << 16, code, circulant(4, 4), 15, &RandomSource::new(0)).is_err());
    }
}
