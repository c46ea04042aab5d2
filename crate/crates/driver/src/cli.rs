use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, Overrides};
use crate::error::{config_err, DriverError};
use crate::pipeline::{run_experiment, Command};

#[derive(Parser, Debug)]
#[command(name = "perpint", version, about = "Perpetual integrals of Levy processes: experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    paths: Option<usize>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; defaults to the config's `out`, then `out/<name>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Simulate paths and first passages.
    Simulate { file: Option<PathBuf> },
    /// Estimate the potential measure on the configured grid.
    Potential { file: Option<PathBuf> },
    /// Run the configured integral tests.
    Test { file: Option<PathBuf> },
    /// Plateau diagnosis of the perpetual integral.
    Diagnose { file: Option<PathBuf> },
    /// Lattice sine or transient trap counterexample.
    Counterexample { file: Option<PathBuf> },
    /// L-set scan over starting points.
    Scan { file: Option<PathBuf> },
    /// Every section of the config.
    Run { file: Option<PathBuf> },
}

impl Sub {
    fn split(self) -> (Command, Option<PathBuf>) {
        match self {
            Sub::Simulate { file } => (Command::Simulate, file),
            Sub::Potential { file } => (Command::Potential, file),
            Sub::Test { file } => (Command::Test, file),
            Sub::Diagnose { file } => (Command::Diagnose, file),
            Sub::Counterexample { file } => (Command::Counterexample, file),
            Sub::Scan { file } => (Command::Scan, file),
            Sub::Run { file } => (Command::Run, file),
        }
    }
}

/// Parses arguments, runs, prints a short summary and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("perpint: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<i32, DriverError> {
    let (command, file) = cli.command.split();
    let c = cli.common;
    let path = file.or(c.config).ok_or_else(|| config_err("no config given (--config FILE)"))?;
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.apply(&Overrides { seed: c.seed, paths: c.paths, horizon: c.horizon, out: c.out });
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let summary = run_experiment(&cfg, command, &out, c.threads)?;
    println!("{} [{}] -> {}", summary.name, cfg.digest(), out.display());
    for f in &summary.findings {
        println!("  {} = {}", f.key, f.value);
    }
    for s in &summary.skipped {
        println!("  skipped {s}");
    }
    for f in &summary.failures {
        println!("  FAILED {f}");
    }
    Ok(summary.exit_code())
}
