//! `open-boson`: CSV front end for the transport formulas and their numerical oracles.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use open_boson::Error;

use crate::commands::{FpSource, ValidateOptions};
use crate::config::{CommonArgs, RunConfig};

/// Bad input rather than a failed computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const AFTER_HELP: &str = "\
Parameter precedence: built-in defaults < --config JSON file < command-line flags.
Defaults: omega_s=1 delta=0 gamma_e=1 gamma_c=1 temp_e=2 temp_c=1 mass=1 hbar=1 k_b=1 seed=7.
hbar and k_b can only be set from the config file.
OPEN_BOSON_THREADS caps the worker pool.
Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.";

#[derive(Debug, Parser)]
#[command(name = "open-boson", version, about, after_help = AFTER_HELP)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Steady occupations, current, transport factors and energy loss.
    Steady,
    /// Integrate the master equation from the number state |n0>.
    Evolve,
    /// Initial/steady current and transport factor with its series value.
    Transport,
    /// Transport factor against collector temperature, one curve per emitter temperature.
    Fig1 {
        /// Emitter temperatures; defaults to --temp-e.
        #[arg(long, value_delimiter = ',')]
        emitter_temps: Vec<f64>,
    },
    /// Collector temperature at which the transport factor drops to a fraction of its maximum.
    Fig2 {
        #[arg(long, default_value_t = 0.5)]
        fraction: f64,
    },
    /// Phase-space density snapshots starting at x0 = --n0 (default 1).
    Fp {
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 1.0, 5.0])]
        times: Vec<f64>,
        #[arg(long, default_value_t = 2048)]
        points: usize,
        #[arg(long, value_enum, default_value_t = FpSource::Numeric)]
        source: FpSource,
    },
    /// Run the oracle-equivalence suite.
    Validate {
        /// Zero every tolerance so that all checks fail.
        #[arg(long)]
        corrupt_tolerance: bool,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 2048)]
        fp_points: usize,
    },
}

#[cfg(feature = "parallel")]
fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("OPEN_BOSON_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| UsageError(format!("OPEN_BOSON_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn init_threads() -> anyhow::Result<()> {
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    init_threads()?;
    let cfg = RunConfig::resolve(&cli.common).map_err(|e| UsageError(format!("{e:#}")))?;
    let out = cfg.out.as_deref();
    match cli.command {
        Command::Steady => commands::write_table(&commands::steady(&cfg)?, out)?,
        Command::Evolve => commands::write_table(&commands::evolve_cmd(&cfg)?, out)?,
        Command::Transport => commands::write_table(&commands::transport(&cfg)?, out)?,
        Command::Fig1 { emitter_temps } => commands::write_table(&commands::fig1(&cfg, &emitter_temps)?, out)?,
        Command::Fig2 { fraction } => commands::write_table(&commands::fig2(&cfg, fraction)?, out)?,
        Command::Fp { times, points, source } => {
            let tables = commands::fp(&cfg, &times, points, source)?;
            match out {
                Some(path) => {
                    for (table, p) in tables.iter().zip(commands::snapshot_paths(path, tables.len())) {
                        commands::write_table(table, Some(&p))?;
                    }
                }
                None => {
                    for table in &tables {
                        commands::write_table(table, None)?;
                    }
                }
            }
        }
        Command::Validate {
            corrupt_tolerance,
            samples,
            fp_points,
        } => {
            let opts = ValidateOptions {
                corrupt_tolerance,
                samples,
                fp_points,
            };
            let report = commands::validate(&cfg, &opts)?;
            let text = format!("{report}\n");
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn is_usage(err: &anyhow::Error) -> bool {
    if err.downcast_ref::<UsageError>().is_some() {
        return true;
    }
    matches!(
        err.downcast_ref::<Error>(),
        Some(
            Error::Domain(_)
                | Error::InadequateTruncation { .. }
                | Error::Stability { .. }
                | Error::DimensionMismatch { .. }
                | Error::InvalidState(_)
                | Error::TooFewSamples { .. }
        )
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_usage(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
