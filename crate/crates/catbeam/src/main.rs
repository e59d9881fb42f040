use std::path::PathBuf;
use std::process::ExitCode;

use catbeam::commands::{self, SweepSpec};
use catbeam::config::{RawConfig, DEFAULT_CONFIG};
use catbeam::CliError;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "catbeam", version, about = "Two-mode cat states from an engineered atom beam")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the config file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the atom-beam protocol and write the trajectory CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the ideal master equation with the config's effective rates.
    Ideal {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suite; exits nonzero if any check fails.
    Check {
        /// Defaults to `examples/default.conf`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vary one key over a list of values, one CSV per value plus `summary.csv`.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// `key=v1,v2,...`
        spec: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, out } => {
            let config = commands::resolve(&commands::read_raw(&common.config)?, common.seed)?;
            let rec = commands::simulate(&config, &out)?;
            for w in &rec.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::Ideal { common, out } => {
            let config = commands::resolve(&commands::read_raw(&common.config)?, common.seed)?;
            commands::ideal(&config, &out)?;
        }
        Command::Check { config, seed, out } => {
            let raw = match config {
                Some(path) => commands::read_raw(&path)?,
                None => RawConfig::parse(DEFAULT_CONFIG)?,
            };
            let config = commands::resolve(&raw, seed)?;
            let (outcomes, status) = commands::check(&config);
            let report: String = outcomes.iter().map(|o| o.line() + "\n").collect();
            print!("{report}");
            if let Some(path) = out {
                catbeam::output::write_atomic(&path, &report).map_err(|source| CliError::Io { path, source })?;
            }
            status?;
        }
        Command::Sweep { common, out, workers, spec } => {
            let raw = commands::read_raw(&common.config)?;
            let spec = SweepSpec::parse(&spec)?;
            for row in commands::sweep(&raw, common.seed, &spec, &out, workers)? {
                println!(
                    "{} = {}: peak {:.6} at t = {}, final {:.6}",
                    spec.key, row.value, row.peak_fidelity, row.peak_time, row.final_fidelity
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
