//! CSV output and aggregate success rates.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{invalid, Result};
use crate::harness::run::TrialRecord;

/// Success rate with a 95% normal-approximation interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    /// `1.96 sqrt(p (1 - p) / N)`.
    pub half_width: f64,
}

impl Summary {
    pub fn of(records: &[TrialRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(invalid("no records to summarize"));
        }
        let trials = records.len();
        let successes = records.iter().filter(|r| r.success).count();
        let rate = successes as f64 / trials as f64;
        let half_width = 1.96 * (rate * (1.0 - rate) / trials as f64).sqrt();
        Ok(Self {
            trials,
            successes,
            rate,
            half_width,
        })
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "success {}/{} = {:.4} +/- {:.4} (95% CI)",
            self.successes, self.trials, self.rate, self.half_width
        )
    }
}

/// Writes `# config` as a comment line, then the header and one row per record.
pub fn write_csv<W: Write>(mut w: W, config_line: Option<&str>, records: &[TrialRecord]) -> Result<()> {
    if let Some(line) = config_line {
        writeln!(w, "# config: {line}")?;
    }
    let mut csv = csv::Writer::from_writer(w);
    for r in records {
        csv.serialize(r)?;
    }
    if records.is_empty() {
        csv.write_record([
            "trial_id",
            "scheme",
            "n",
            "k",
            "delta",
            "m_total",
            "success",
            "err_sq",
            "tail_sq",
            "decode_ops",
            "wall_ms",
            "seed",
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<TrialRecord>> {
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let mut out = Vec::new();
    for row in csv.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Writes the CSV to `path` (if any) and returns the aggregate.
pub fn emit_report(records: &[TrialRecord], config_line: Option<&str>, path: Option<&Path>) -> Result<Summary> {
    let summary = Summary::of(records)?;
    if let Some(path) = path {
        let file = BufWriter::new(File::create(path)?);
        write_csv(file, config_line, records)?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: u64, success: bool) -> TrialRecord {
        TrialRecord {
            trial_id: id,
            scheme: "pipeline".into(),
            n: 4096,
            k: 4,
            delta: 0.25,
            m_total: 123_456,
            success,
            err_sq: 0.1 + id as f64 / 7.0,
            tail_sq: 0.09000000000000001,
            decode_ops: 99,
            wall_ms: 1.25,
            seed: u64::MAX - id,
        }
    }

    #[test]
    fn rate_and_interval() {
        let records: Vec<_> = (0..100).map(|i| record(i, i < 93)).collect();
        let s = Summary::of(&records).unwrap();
        assert_eq!(s.rate, 0.93);
        // 1.96 * sqrt(0.93 * 0.07 / 100) = 0.05001
        assert!((s.half_width - 0.050009).abs() < 1e-5, "{}", s.half_width);
    }

    #[test]
    fn empty_records_are_an_error() {
        assert!(Summary::of(&[]).is_err());
        assert!(emit_report(&[], None, None).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let records: Vec<_> = (0..5).map(|i| record(i, i % 2 == 0)).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, Some("scheme=pipeline n=4096"), &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# config: scheme=pipeline n=4096");
        assert_eq!(
            lines.next().unwrap(),
            "trial_id,scheme,n,k,delta,m_total,success,err_sq,tail_sq,decode_ops,wall_ms,seed"
        );
        assert_eq!(read_csv(&buf[..]).unwrap(), records);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = emit_report(&[record(0, true)], None, Some(Path::new("/nonexistent/dir/x.csv")));
        assert!(matches!(err, Err(crate::Error::Io(_))));
    }
}
