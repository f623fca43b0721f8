//! Unit-norm test signal families.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::Signal;
use crate::seeded::RandomSource;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SignalModel {
    /// `k` entries of magnitude `1/sqrt(k)` with random signs.
    ExactSparse,
    /// `k` equal head entries plus a gaussian tail of the given norm.
    SparsePlusTail { tail: f64 },
    /// Dense signal with flat-Dirichlet energy profile.
    DirichletFlat,
    /// `2k` entries of identical magnitude, tying at the head boundary.
    AdversarialTies,
}

impl fmt::Display for SignalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalModel::ExactSparse => f.write_str("exact-sparse"),
            SignalModel::SparsePlusTail { tail } => write!(f, "sparse-plus-tail({tail})"),
            SignalModel::DirichletFlat => f.write_str("dirichlet-flat"),
            SignalModel::AdversarialTies => f.write_str("adversarial-ties"),
        }
    }
}

impl FromStr for SignalModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "exact-sparse" => return Ok(SignalModel::ExactSparse),
            "dirichlet-flat" => return Ok(SignalModel::DirichletFlat),
            "adversarial-ties" => return Ok(SignalModel::AdversarialTies),
            "sparse-plus-tail" => return Ok(SignalModel::SparsePlusTail { tail: 0.3 }),
            _ => {}
        }
        if let Some(arg) = s
            .strip_prefix("sparse-plus-tail(")
            .and_then(|r| r.strip_suffix(')'))
        {
            let tail = arg
                .trim()
                .parse()
                .map_err(|_| invalid(format!("bad tail norm in {s:?}")))?;
            return Ok(SignalModel::SparsePlusTail { tail });
        }
        Err(invalid(format!("unknown signal model {s:?}")))
    }
}

/// `count` distinct positions in `0..n`.
fn distinct_positions(n: usize, count: usize, src: &RandomSource) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    let mut draw = 0u64;
    while out.len() < count {
        let i = src.below_at(&[0x70_6f73, draw], n as u64) as usize;
        draw += 1;
        if seen.insert(i) {
            out.push(i);
        }
    }
    out
}

fn normalized(mut values: Vec<f64>) -> Result<Signal> {
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(invalid("generated an all-zero signal"));
    }
    values.iter_mut().for_each(|v| *v /= norm);
    Signal::new(values)
}

/// Draws a unit-norm signal; deterministic in `src`.
pub fn gen_signal(model: SignalModel, n: usize, k: usize, src: &RandomSource) -> Result<Signal> {
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let sign = |i: usize| src.sign_at(&[0x73_676e, i as u64]);
    match model {
        SignalModel::ExactSparse => {
            let mut values = vec![0.0; n];
            let mag = 1.0 / (k as f64).sqrt();
            for i in distinct_positions(n, k, src) {
                values[i] = sign(i) * mag;
            }
            normalized(values)
        }
        SignalModel::AdversarialTies => {
            let count = (2 * k).min(n);
            let mut values = vec![0.0; n];
            let mag = 1.0 / (count as f64).sqrt();
            for i in distinct_positions(n, count, src) {
                values[i] = sign(i) * mag;
            }
            normalized(values)
        }
        SignalModel::DirichletFlat => {
            let values = (0..n)
                .map(|i| {
                    let w = -src.uniform_at(&[0x64_6972, i as u64]).ln();
                    sign(i) * w.sqrt()
                })
                .collect();
            normalized(values)
        }
        SignalModel::SparsePlusTail { tail } => {
            if !(0.0..1.0).contains(&tail) {
                return Err(invalid(format!("tail norm {tail} must lie in [0, 1)")));
            }
            if tail > 0.0 && n == k {
                return Err(invalid("no room for a tail when k = n"));
            }
            let head_mag = ((1.0 - tail * tail) / k as f64).sqrt();
            let head = distinct_positions(n, k, src);
            let is_head: BTreeSet<usize> = head.iter().copied().collect();
            let mut values = vec![0.0; n];
            if tail > 0.0 {
                let mut energy = 0.0;
                for (i, v) in values.iter_mut().enumerate() {
                    if !is_head.contains(&i) {
                        *v = src.gaussian_at(&[0x7461_696c, i as u64]);
                        energy += *v * *v;
                    }
                }
                let scale = tail / energy.sqrt();
                values.iter_mut().for_each(|v| *v *= scale);
                if values.iter().any(|v| v.abs() >= head_mag) {
                    return Err(invalid(format!(
                        "tail of norm {tail} is too concentrated for n = {n}, k = {k}"
                    )));
                }
            }
            for &i in &head {
                values[i] = sign(i) * head_mag;
            }
            normalized(values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tail_stats;

    #[test]
    fn exact_sparse_k1_is_signed_basis_vector() {
        let x = gen_signal(SignalModel::ExactSparse, 50, 1, &RandomSource::new(3)).unwrap();
        let nz: Vec<_> = x.nonzeros().collect();
        assert_eq!(nz.len(), 1);
        assert_eq!(nz[0].1.abs(), 1.0);
    }

    #[test]
    fn all_models_unit_norm() {
        let models = [
            SignalModel::ExactSparse,
            SignalModel::SparsePlusTail { tail: 0.3 },
            SignalModel::DirichletFlat,
            SignalModel::AdversarialTies,
        ];
        for (s, m) in models.into_iter().enumerate() {
            for seed in 0..5 {
                let x = gen_signal(m, 1000, 7, &RandomSource::new(seed * 10 + s as u64)).unwrap();
                assert!((x.norm() - 1.0).abs() < 1e-12, "{m}");
            }
        }
    }

    #[test]
    fn tail_energy_is_exact() {
        for seed in 0..10 {
            let m = SignalModel::SparsePlusTail { tail: 0.3 };
            let x = gen_signal(m, 4096, 4, &RandomSource::new(seed)).unwrap();
            let t = tail_stats(&x, 4).unwrap();
            assert!((t.tail_sq - 0.09).abs() < 1e-9, "{}", t.tail_sq);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let src = RandomSource::new(1);
        assert!(gen_signal(SignalModel::SparsePlusTail { tail: 1.0 }, 100, 4, &src).is_err());
        assert!(gen_signal(SignalModel::ExactSparse, 10, 11, &src).is_err());
        assert!(gen_signal(SignalModel::ExactSparse, 10, 0, &src).is_err());
    }

    #[test]
    fn deterministic_and_parseable() {
        let src = RandomSource::new(77);
        let m: SignalModel = "sparse-plus-tail(0.25)".parse().unwrap();
        assert_eq!(m, SignalModel::SparsePlusTail { tail: 0.25 });
        assert_eq!(m.to_string().parse::<SignalModel>().unwrap(), m);
        assert_eq!(gen_signal(m, 300, 3, &src).unwrap(), gen_signal(m, 300, 3, &src).unwrap());
        assert!("gaussian".parse::<SignalModel>().is_err());
    }
}
