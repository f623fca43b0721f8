//! Structural invariants checked over a fixed seed set.

use std::fmt;

use crate::error::Result;
use crate::expander::{ExpanderParams, ExpanderSchema};
use crate::harness::config::{ExperimentConfig, SchemeKind};
use crate::harness::report::write_csv;
use crate::harness::run::run_experiment;
use crate::harness::signals::{gen_signal, SignalModel};
use crate::model::Signal;
use crate::partition::{IntervalPartition, Partition};
use crate::ppq::{PpqConstants, PpqSchema, SUB_ITERATIONS};
use crate::seeded::RandomSource;
use crate::sketch::{Outcome, SchemeSpec};

pub const STANDARD_SEEDS: [u64; 8] = [1, 2, 3, 5, 8, 13, 21, 34];

const MODELS: [SignalModel; 4] = [
    SignalModel::ExactSparse,
    SignalModel::SparsePlusTail { tail: 0.3 },
    SignalModel::DirichletFlat,
    SignalModel::AdversarialTies,
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.violations == 0 && c.cases > 0)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let verdict = if c.violations == 0 { "ok" } else { "FAILED" };
            writeln!(f, "{:<28} {:>7} cases {:>4} violations  {verdict}", c.name, c.cases, c.violations)?;
        }
        Ok(())
    }
}

const N: usize = 512;
const K: usize = 2;

fn small_specs(seed: u64) -> Vec<SchemeSpec> {
    let base = ExperimentConfig {
        n: N,
        k: K,
        delta: 0.3,
        parts: Some(64),
        b: Some(4),
        mg: Some(300),
        ..ExperimentConfig::default()
    };
    SchemeKind::ALL
        .iter()
        .map(|&scheme| ExperimentConfig { scheme, ..base.clone() }.spec(seed))
        .collect::<Result<Vec<_>>>()
        .expect("self-test parameters are valid")
}

fn signals(seed: u64) -> Vec<Signal> {
    MODELS
        .iter()
        .enumerate()
        .map(|(m, &model)| gen_signal(model, N, K, &RandomSource::new(seed).derive(&[m as u64])))
        .collect::<Result<Vec<_>>>()
        .expect("self-test signals are valid")
}

fn decode(spec: &SchemeSpec, x: &Signal) -> Result<Outcome> {
    let sketch = spec.build()?;
    sketch.decode(sketch.measure(x)?)
}

/// Every bucket pair reads `(+,-)`, `(-,+)`, or `(+,+)` exactly when `z = 0`.
fn complement_bits(seeds: &[u64]) -> Result<Check> {
    let mut check = Check {
        name: "complement-bits",
        cases: 0,
        violations: 0,
    };
    for &seed in seeds {
        let part = IntervalPartition::with_parts(N, 64)?;
        let s = PpqSchema::build(part, K, 0.1, PpqConstants::default(), seed)?;
        for x in signals(seed).into_iter().chain([Signal::zeros(N)]) {
            let z = s.linear_measurements(&x)?;
            let bits = s.measure(&x)?;
            for r in 0..s.repetitions() {
                for l in 0..SUB_ITERATIONS {
                    for b in 0..s.buckets() {
                        let (y, y_neg) = bits.pair(r, l, b);
                        let zq = z[(r * SUB_ITERATIONS + l) * s.buckets() + b];
                        let ok = if zq == 0.0 { y && y_neg } else { y != y_neg && y == (zq > 0.0) };
                        check.cases += 1;
                        check.violations += usize::from(!ok);
                    }
                }
            }
        }
    }
    Ok(check)
}

fn scaling_invariance(seeds: &[u64]) -> Result<Check> {
    let mut check = Check {
        name: "positive-scaling",
        cases: 0,
        violations: 0,
    };
    for &seed in seeds {
        for spec in small_specs(seed) {
            for x in signals(seed) {
                let base = decode(&spec, &x)?;
                for factor in [0.25, 3.0, 16.0] {
                    check.cases += 1;
                    check.violations += usize::from(decode(&spec, &x.scaled(factor))? != base);
                }
            }
        }
    }
    Ok(check)
}

/// Flipping `x` keeps every support and negates the pipeline estimate.
fn sign_flip(seeds: &[u64]) -> Result<Check> {
    let mut check = Check {
        name: "sign-flip-antisymmetry",
        cases: 0,
        violations: 0,
    };
    for &seed in seeds {
        for spec in small_specs(seed) {
            for x in signals(seed) {
                let pos = decode(&spec, &x)?;
                let neg = decode(&spec, &x.scaled(-1.0))?;
                let estimate_ok = match (&pos.estimate, &neg.estimate) {
                    (Some(a), Some(b)) => {
                        a.entries.len() == b.entries.len()
                            && a.entries.iter().zip(&b.entries).all(|(p, q)| p.0 == q.0 && p.1 == -q.1)
                    }
                    (None, None) => true,
                    _ => false,
                };
                check.cases += 1;
                check.violations += usize::from(pos.support != neg.support || !estimate_ok);
            }
        }
    }
    Ok(check)
}

fn name_partition(seeds: &[u64]) -> Result<Check> {
    let mut check = Check {
        name: "name-partition",
        cases: 0,
        violations: 0,
    };
    for &seed in seeds {
        let s = ExpanderSchema::build(N, K, ExpanderParams::default(), seed)?;
        for (j, layer) in s.layers().iter().enumerate() {
            let parts: Vec<u64> = layer.partition.parts().collect();
            for i in 0..N {
                let name = s.make_name(i, j);
                let ok = layer.partition.part_of(i) == Some(name)
                    && parts.binary_search(&name).is_ok()
                    && s.naming().own_field(name) == s.naming().layer_hash(j, i);
                check.cases += 1;
                check.violations += usize::from(!ok);
            }
        }
    }
    Ok(check)
}

fn determinism(seeds: &[u64]) -> Result<Check> {
    let mut check = Check {
        name: "byte-identical-csv",
        cases: 0,
        violations: 0,
    };
    for &seed in seeds {
        for scheme in SchemeKind::ALL {
            let config = ExperimentConfig {
                scheme,
                n: N,
                k: K,
                parts: Some(64),
                b: Some(4),
                mg: Some(300),
                trials: 3,
                seed,
                model: SignalModel::SparsePlusTail { tail: 0.2 },
                ..ExperimentConfig::default()
            };
            let mut runs = Vec::new();
            for _ in 0..2 {
                let mut buf = Vec::new();
                write_csv(&mut buf, Some(&config.summary_line()), &run_experiment(&config)?)?;
                runs.push(buf);
            }
            check.cases += 1;
            check.violations += usize::from(runs[0] != runs[1]);
        }
    }
    Ok(check)
}

/// Runs every invariant suite over `seeds`.
pub fn run_selftest(seeds: &[u64]) -> Result<SelftestReport> {
    Ok(SelftestReport {
        checks: vec![
            complement_bits(seeds)?,
            scaling_invariance(seeds)?,
            sign_flip(seeds)?,
            name_partition(seeds)?,
            determinism(seeds)?,
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_hold_on_two_seeds() {
        let report = run_selftest(&STANDARD_SEEDS[..2]).unwrap();
        assert_eq!(report.checks.len(), 5);
        assert!(report.passed(), "{report}");
    }
}
