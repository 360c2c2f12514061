use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use pinsec::config::{parse_override, SweepConfig};
use pinsec::strategy::StrategyRegistry;
use pinsec::sweep::{self, DumpTarget, SweepTable};

/// Secrecy outage probability of a pinching-antenna downlink.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and write one CSV row per (axis value, method).
    Sweep(Common),
    /// Check the scenario and report supports, rho, residuals and fallbacks.
    Validate(Common),
    /// Run only the Monte Carlo methods of the configured sweep.
    Mc(Common),
    /// Write a density or CDF as a two-column CSV.
    DumpPdf {
        /// One of bob, eve, bob-cdf, eve-cdf, w, s, w-oracle, s-oracle, z, x.
        which: String,
        #[command(flatten)]
        common: Common,
        /// Number of evenly spaced abscissae.
        #[arg(long, default_value_t = 2001)]
        points: usize,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo samples per sweep point.
    #[arg(long)]
    samples: Option<usize>,
    /// Gauss-Chebyshev node count.
    #[arg(long)]
    nodes: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. `--set scenario.rho=0.4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<SweepConfig> {
        let mut overrides = self
            .overrides
            .iter()
            .map(|s| parse_override(s))
            .collect::<pinsec::Result<Vec<_>>>()?;
        // dedicated flags win over `--set` and the file
        if let Some(seed) = self.seed {
            overrides.push(("sweep.seed".into(), seed.to_string()));
        }
        if let Some(n) = self.samples {
            overrides.push(("sweep.mc_samples".into(), n.to_string()));
        }
        if let Some(n) = self.nodes {
            overrides.push(("sweep.node_count".into(), n.to_string()));
        }
        SweepConfig::from_file(&self.config, &overrides)
            .with_context(|| format!("loading {}", self.config.display()))
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn emit(table: &SweepTable, common: &Common) -> Result<()> {
    for note in &table.notes {
        eprintln!("info: {note}");
    }
    let mut out = common.output()?;
    table.write_csv(&mut out)?;
    out.flush()?;
    if let Some(p) = &common.out {
        eprintln!("info: wrote {} rows to {}", table.rows.len(), p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let registry = StrategyRegistry::with_defaults();
    match cli.command {
        Command::Sweep(common) => {
            let config = common.load()?;
            emit(&sweep::run_sweep(&config, &registry)?, &common)?;
        }
        Command::Mc(common) => {
            let config = common.load()?;
            emit(&sweep::run_mc(&config, &registry)?, &common)?;
        }
        Command::Validate(common) => {
            let config = common.load()?;
            let report = sweep::validate_scenario(&config);
            eprintln!("{report}");
            if !report.is_ok() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::DumpPdf { which, common, points } => {
            let target: DumpTarget = which.parse()?;
            let config = common.load()?;
            let mut out = common.output()?;
            sweep::dump_pdf(target, &config.scenario, points, &mut out)?;
            out.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
