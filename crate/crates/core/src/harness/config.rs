//! Experiment configuration: defaults, `key=value` files, overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::btree::choose_branching;
use crate::error::{invalid, Error, Result};
use crate::expander::ExpanderParams;
use crate::harness::signals::SignalModel;
use crate::heavy::HeavyParams;
use crate::ppq::PpqConstants;
use crate::pv::PipelineParams;
use crate::sketch::SchemeSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeKind {
    Ppq,
    Ppcs,
    Btree,
    Expander,
    HeavyHitters,
    Pipeline,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::Ppq,
        SchemeKind::Ppcs,
        SchemeKind::Btree,
        SchemeKind::Expander,
        SchemeKind::HeavyHitters,
        SchemeKind::Pipeline,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Ppq => "ppq",
            SchemeKind::Ppcs => "ppcs",
            SchemeKind::Btree => "btree",
            SchemeKind::Expander => "expander",
            SchemeKind::HeavyHitters => "heavy-hitters",
            SchemeKind::Pipeline => "pipeline",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| invalid(format!("unknown scheme {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: SchemeKind,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    /// B-tree branching; chosen from `gamma` when absent.
    pub b: Option<usize>,
    pub gamma: f64,
    pub sigma: f64,
    /// Gaussian rows of the pipeline; the default formula when absent.
    pub mg: Option<usize>,
    /// Part count for `ppq` and `ppcs`; `n / 8` when absent.
    pub parts: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub model: SignalModel,
    pub out: Option<PathBuf>,
    /// Record wall-clock time; off keeps CSV output reproducible.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Pipeline,
            n: 4096,
            k: 4,
            delta: 0.25,
            b: None,
            gamma: 0.5,
            sigma: 0.0,
            mg: None,
            parts: None,
            trials: 10,
            seed: 0,
            model: SignalModel::ExactSparse,
            out: None,
            timing: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| invalid(format!("bad value {value:?} for {key}: {e}")))
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    match value.trim() {
        "" | "auto" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

impl ExperimentConfig {
    /// Sets one field by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "scheme" => self.scheme = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "b" => self.b = optional(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "mg" => self.mg = optional(key, value)?,
            "parts" => self.parts = optional(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "model" => self.model = value.parse()?,
            "tail" => {
                let tail = parse(key, value)?;
                self.model = SignalModel::SparsePlusTail { tail };
            }
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "timing" => self.timing = parse(key, value)?,
            other => return Err(invalid(format!("unknown configuration key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a line-oriented `key = value` file; `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key=value", no + 1)))?;
            self.set(key, value)
                .map_err(|e| invalid(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn from_file_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_file_text(text)?;
        Ok(c)
    }

    /// Every field as `key=value`, space separated, `out` and `timing` excluded.
    pub fn summary_line(&self) -> String {
        let opt = |v: Option<usize>| v.map_or("auto".to_string(), |v| v.to_string());
        format!(
            "scheme={} n={} k={} delta={} b={} gamma={} sigma={} mg={} parts={} trials={} seed={} model={}",
            self.scheme,
            self.n,
            self.k,
            self.delta,
            opt(self.b),
            self.gamma,
            self.sigma,
            opt(self.mg),
            opt(self.parts),
            self.trials,
            self.seed,
            self.model
        )
    }

    pub fn parts(&self) -> usize {
        self.parts.unwrap_or((self.n / 8).max(1))
    }

    pub fn branching(&self) -> Result<usize> {
        match self.b {
            Some(b) => Ok(b),
            None => choose_branching(self.n, self.k, self.delta, self.gamma),
        }
    }

    /// The scheme description for one trial's seed.
    pub fn spec(&self, seed: u64) -> Result<SchemeSpec> {
        let (n, k, delta) = (self.n, self.k, self.delta);
        let consts = PpqConstants::default();
        Ok(match self.scheme {
            SchemeKind::Ppq => SchemeSpec::Ppq {
                n,
                parts: self.parts(),
                k,
                delta,
                consts,
                seed,
            },
            SchemeKind::Ppcs => SchemeSpec::Ppcs {
                n,
                parts: self.parts(),
                k,
                count_exponent: 1.0,
                consts,
                seed,
            },
            SchemeKind::Btree => SchemeSpec::Btree {
                n,
                k,
                b: self.branching()?,
                delta,
                consts,
                seed,
            },
            SchemeKind::Expander => SchemeSpec::Expander {
                n,
                k,
                params: ExpanderParams::default(),
                seed,
            },
            SchemeKind::HeavyHitters => SchemeSpec::HeavyHitters {
                n,
                k,
                params: HeavyParams::default(),
                seed,
            },
            SchemeKind::Pipeline => SchemeSpec::Pipeline {
                n,
                k,
                delta,
                params: PipelineParams {
                    gaussian_rows: self.mg,
                    sigma: self.sigma,
                    ..PipelineParams::default()
                },
                seed,
            },
        })
    }

    /// Checks the configuration by building the sketch once.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.k == 0 || self.k > self.n {
            return Err(invalid(format!("need 1 <= k <= n, got k = {}, n = {}", self.k, self.n)));
        }
        if let SignalModel::SparsePlusTail { tail } = self.model {
            if !(0.0..1.0).contains(&tail) {
                return Err(invalid(format!("tail norm {tail} must lie in [0, 1)")));
            }
        }
        self.spec(self.seed)?.build().map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_text_with_comments() {
        let text = "# pipeline run\nscheme = btree\nn=1024 # dimension\n\nk=4\nb=8\ntail=0.2\n";
        let c = ExperimentConfig::from_file_text(text).unwrap();
        assert_eq!(c.scheme, SchemeKind::Btree);
        assert_eq!((c.n, c.k, c.b), (1024, 4, Some(8)));
        assert_eq!(c.model, SignalModel::SparsePlusTail { tail: 0.2 });
    }

    #[test]
    fn bad_lines_name_the_line() {
        let err = ExperimentConfig::from_file_text("n=4\nbogus\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(ExperimentConfig::from_file_text("colour=red").is_err());
        assert!(ExperimentConfig::from_file_text("scheme=lasso").is_err());
    }

    #[test]
    fn summary_line_parses_back() {
        let mut c = ExperimentConfig {
            scheme: SchemeKind::Ppcs,
            mg: Some(300),
            model: SignalModel::SparsePlusTail { tail: 0.3 },
            ..ExperimentConfig::default()
        };
        c.seed = 17;
        let mut back = ExperimentConfig::default();
        for pair in c.summary_line().split(' ') {
            let (key, value) = pair.split_once('=').unwrap();
            back.set(key, value).unwrap();
        }
        assert_eq!(back, c);
    }

    #[test]
    fn validation_runs_before_trials() {
        let zero = ExperimentConfig {
            trials: 0,
            ..ExperimentConfig::default()
        };
        assert!(zero.validate().is_err());
        let crowded = ExperimentConfig {
            scheme: SchemeKind::Expander,
            n: 1024,
            k: 40,
            ..ExperimentConfig::default()
        };
        assert!(crowded.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
