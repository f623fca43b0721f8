use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use onebit::harness::config::ExperimentConfig;
use onebit::harness::report::{emit_report, write_csv};
use onebit::harness::run::run_experiment;
use onebit::harness::selftest::{run_selftest, STANDARD_SEEDS};
use onebit::harness::signals::gen_signal;
use onebit::model::Signal;
use onebit::seeded::RandomSource;
use onebit::wire::{read_measurement, rebuild, write_measurement, Header};

#[derive(Parser)]
#[command(name = "onebit", version, about = "One-bit compressed sensing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run Monte Carlo trials and write one CSV row per trial.
    Experiment {
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        trials: Option<String>,
        /// Record wall-clock time per trial (breaks byte-identical output).
        #[arg(long)]
        timing: bool,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure a signal and write a self-describing bit file.
    Encode {
        #[command(flatten)]
        params: Params,
        /// Text file of n whitespace-separated values; a generated signal when absent.
        #[arg(long)]
        signal: Option<PathBuf>,
        /// Seed for the generated signal.
        #[arg(long, default_value_t = 0)]
        signal_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a bit file and print the result as JSON.
    Decode {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the invariant suites.
    Selftest {
        /// Comma-separated seeds; the standard set when absent.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
}

/// Scheme and signal parameters shared by `experiment` and `encode`.
#[derive(Args)]
struct Params {
    /// key=value file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    mg: Option<String>,
    #[arg(long)]
    parts: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    tail: Option<String>,
}

impl Params {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            config.apply_file_text(&text)?;
        }
        let flags = [
            ("scheme", &self.scheme),
            ("n", &self.n),
            ("k", &self.k),
            ("delta", &self.delta),
            ("b", &self.b),
            ("gamma", &self.gamma),
            ("sigma", &self.sigma),
            ("mg", &self.mg),
            ("parts", &self.parts),
            ("seed", &self.seed),
            ("model", &self.model),
            ("tail", &self.tail),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        Ok(config)
    }
}

fn read_signal(path: &PathBuf, n: usize) -> Result<Signal> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let values = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().with_context(|| format!("bad value {t:?}")))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != n {
        bail!("signal file holds {} values, n = {n}", values.len());
    }
    Ok(Signal::new(values)?)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Experiment {
            params,
            trials,
            timing,
            out,
        } => {
            let mut config = params.config()?;
            if let Some(t) = trials {
                config.set("trials", &t)?;
            }
            config.timing |= timing;
            if let Some(path) = out {
                config.out = Some(path);
            }
            let records = run_experiment(&config)?;
            let line = config.summary_line();
            let summary = match &config.out {
                Some(path) => emit_report(&records, Some(&line), Some(path))?,
                None => {
                    write_csv(io::stdout().lock(), Some(&line), &records)?;
                    emit_report(&records, None, None)?
                }
            };
            eprintln!("{}: {summary}", config.scheme);
            Ok(true)
        }
        Command::Encode {
            params,
            signal,
            signal_seed,
            out,
        } => {
            let config = params.config()?;
            let spec = config.spec(config.seed)?;
            let sketch = spec.build()?;
            let x = match &signal {
                Some(path) => read_signal(path, config.n)?,
                None => gen_signal(config.model, config.n, config.k, &RandomSource::new(signal_seed))?,
            };
            let blocks = sketch.measure(&x)?;
            let header = Header::new(&spec, &sketch);
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_measurement(BufWriter::new(file), &header, &blocks)?;
            eprintln!("{} rows in {} blocks -> {}", header.rows, header.blocks.len(), out.display());
            Ok(true)
        }
        Command::Decode { input } => {
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let (header, blocks) = read_measurement(BufReader::new(file))?;
            let sketch = rebuild(&header)?;
            let outcome = sketch.decode(blocks)?;
            println!("{}", serde_json::to_string_pretty(&outcome)?);
            Ok(true)
        }
        Command::Selftest { seeds } => {
            let seeds = if seeds.is_empty() { STANDARD_SEEDS.to_vec() } else { seeds };
            let report = run_selftest(&seeds)?;
            print!("{report}");
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
