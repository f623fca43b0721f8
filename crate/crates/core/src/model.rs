//! Signals, sparse estimates, and the exact definitions every sketch is
//! judged against: `sign`, the head/tail split and the heavy-hitter set.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One-bit quantizer with the convention `sign(0) = +1`.
pub fn sign_scalar(theta: f64) -> Result<i8> {
    if !theta.is_finite() {
        return Err(invalid(format!("sign of non-finite value {theta}")));
    }
    Ok(if theta >= 0.0 { 1 } else { -1 })
}

/// A dense real signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    values: Vec<f64>,
}

impl Signal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("signal must have positive dimension"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("signal entry {pos} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    /// Builds a signal of dimension `n` from `(index, value)` pairs.
    pub fn from_sparse(n: usize, entries: &[(usize, f64)]) -> Result<Self> {
        let mut values = vec![0.0; n];
        for &(i, v) in entries {
            if i >= n {
                return Err(invalid(format!("index {i} out of range for n = {n}")));
            }
            values[i] = v;
        }
        Signal::new(values)
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Nonzero entries in increasing index order.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.nonzeros().map(|(i, _)| i).collect()
    }

    pub fn scaled(&self, factor: f64) -> Signal {
        Signal {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn squared_distance(&self, other: &Signal) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// An `O(k)`-sparse estimate as `(index, value)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseEstimate {
    pub entries: Vec<(usize, f64)>,
    pub sparsity_bound: usize,
}

impl SparseEstimate {
    pub fn new(entries: Vec<(usize, f64)>, sparsity_bound: usize) -> Result<Self> {
        if entries.len() > sparsity_bound {
            return Err(invalid(format!(
                "{} entries exceed the sparsity bound {sparsity_bound}",
                entries.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for &(i, _) in &entries {
            if !seen.insert(i) {
                return Err(invalid(format!("duplicate index {i}")));
            }
        }
        Ok(Self {
            entries,
            sparsity_bound,
        })
    }

    pub fn zero(sparsity_bound: usize) -> Self {
        Self {
            entries: Vec::new(),
            sparsity_bound,
        }
    }

    pub fn to_dense(&self, n: usize) -> Result<Signal> {
        Signal::from_sparse(n, &self.entries)
    }
}

/// Tail energy and heavy-hitter set of a signal.
#[derive(Clone, Debug, PartialEq)]
pub struct TailStats {
    /// `||x_{-k}||_2^2`: energy outside the `k` largest magnitudes.
    pub tail_sq: f64,
    /// `H(x, k) = { i : |x_i|^2 >= tail_sq / k }`.
    pub heavy: BTreeSet<usize>,
}

/// Indices of the `k` largest magnitudes; ties go to the lower index.
pub fn head_indices(x: &Signal, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.dim()).collect();
    order.sort_by(|&a, &b| {
        x.get(b)
            .abs()
            .total_cmp(&x.get(a).abs())
            .then_with(|| a.cmp(&b))
    });
    order.truncate(k);
    order
}

pub fn tail_stats(x: &Signal, k: usize) -> Result<TailStats> {
    if k == 0 || k > x.dim() {
        return Err(invalid(format!(
            "k = {k} outside 1..={} for tail statistics",
            x.dim()
        )));
    }
    let head: BTreeSet<usize> = head_indices(x, k).into_iter().collect();
    let tail_sq: f64 = (0..x.dim())
        .filter(|i| !head.contains(i))
        .map(|i| x.get(i) * x.get(i))
        .sum();
    let heavy = if tail_sq == 0.0 {
        x.support()
    } else {
        let threshold = tail_sq / k as f64;
        (0..x.dim())
            .filter(|&i| x.get(i) * x.get(i) >= threshold)
            .collect()
    };
    Ok(TailStats { tail_sq, heavy })
}

/// `x_S`: agrees with `x` on `S`, zero elsewhere.
pub fn restrict(x: &Signal, set: &BTreeSet<usize>) -> Result<Signal> {
    let mut values = vec![0.0; x.dim()];
    for &i in set {
        if i >= x.dim() {
            return Err(invalid(format!(
                "index {i} out of range for n = {}",
                x.dim()
            )));
        }
        values[i] = x.get(i);
    }
    Ok(Signal { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn sign_convention() {
        assert_eq!(sign_scalar(0.0).unwrap(), 1);
        assert_eq!(sign_scalar(-0.0).unwrap(), 1);
        assert_eq!(sign_scalar(-0.5).unwrap(), -1);
        assert_eq!(sign_scalar(3.2).unwrap(), 1);
        assert!(sign_scalar(f64::NAN).is_err());
        assert!(sign_scalar(f64::INFINITY).is_err());
    }

    #[test]
    fn tail_of_basis_vector() {
        let x = Signal::from_sparse(4, &[(0, 1.0)]).unwrap();
        let t = tail_stats(&x, 1).unwrap();
        assert_eq!(t.tail_sq, 0.0);
        assert_eq!(t.heavy, set(&[0]));
    }

    #[test]
    fn tail_of_flat_vector() {
        let x = Signal::new(vec![0.5; 4]).unwrap();
        let t = tail_stats(&x, 1).unwrap();
        assert!((t.tail_sq - 0.75).abs() < 1e-15);
        assert!(t.heavy.is_empty());
    }

    #[test]
    fn tail_of_one_dominant_entry() {
        let s = 7f64.sqrt();
        let x = Signal::new(vec![2.0 / s, 1.0 / s, 1.0 / s, 1.0 / s]).unwrap();
        let t = tail_stats(&x, 1).unwrap();
        assert!((t.tail_sq - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(t.heavy, set(&[0]));
    }

    #[test]
    fn tail_rejects_bad_k() {
        let x = Signal::zeros(3);
        assert!(tail_stats(&x, 0).is_err());
        assert!(tail_stats(&x, 4).is_err());
    }

    #[test]
    fn head_breaks_ties_low_index_first() {
        let x = Signal::new(vec![1.0, -1.0, 1.0, 0.5]).unwrap();
        assert_eq!(head_indices(&x, 2), vec![0, 1]);
    }

    #[test]
    fn restrict_examples() {
        let x = Signal::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(restrict(&x, &set(&[1])).unwrap().values(), &[0.0, 2.0, 0.0]);
        assert_eq!(restrict(&x, &set(&[])).unwrap().values(), &[0.0, 0.0, 0.0]);
        assert_eq!(restrict(&x, &set(&[0, 1, 2])).unwrap(), x);
        assert!(restrict(&x, &set(&[3])).is_err());
    }

    #[test]
    fn sparse_estimate_checks() {
        assert!(SparseEstimate::new(vec![(1, 0.5), (1, 0.2)], 4).is_err());
        assert!(SparseEstimate::new(vec![(1, 0.5), (2, 0.2)], 1).is_err());
        let e = SparseEstimate::new(vec![(2, 0.5)], 1).unwrap();
        assert_eq!(e.to_dense(3).unwrap().values(), &[0.0, 0.0, 0.5]);
    }

    fn vec_and_set() -> impl Strategy<Value = (Vec<f64>, Vec<bool>, usize)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(any::<bool>(), n),
                1..=n,
            )
        })
    }

    proptest! {
        #[test]
        fn heavy_set_at_most_2k((v, _, k) in vec_and_set()) {
            let x = Signal::new(v).unwrap();
            let t = tail_stats(&x, k).unwrap();
            if t.tail_sq > 0.0 {
                prop_assert!(t.heavy.len() <= 2 * k);
            }
        }

        #[test]
        fn restrict_idempotent_and_pythagorean((v, mask, _) in vec_and_set()) {
            let x = Signal::new(v).unwrap();
            let s: BTreeSet<usize> = mask.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect();
            let c: BTreeSet<usize> = (0..x.dim()).filter(|i| !s.contains(i)).collect();
            let xs = restrict(&x, &s).unwrap();
            prop_assert_eq!(restrict(&xs, &s).unwrap(), xs.clone());
            let xc = restrict(&x, &c).unwrap();
            let lhs = x.norm_sq();
            prop_assert!((lhs - xs.norm_sq() - xc.norm_sq()).abs() <= 1e-12 * (1.0 + lhs));
        }
    }
}
