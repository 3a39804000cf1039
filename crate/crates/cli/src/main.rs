#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::config::Command;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    /// Tooth table and absorption spectrum.
    Spectrum,
    /// Single propagation: input/output traces and echo report.
    Echo,
    /// Thermally averaged trace and efficiency-vs-temperature table.
    Doppler,
    /// Transmission and forward efficiency over cell lengths.
    Sweep,
    /// Efficiency-law fits of a sweep.csv.
    Fit,
    /// Analytic emission probability against a thin-medium propagation.
    Toy,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Spectrum => Command::Spectrum,
            CommandArg::Echo => Command::Echo,
            CommandArg::Doppler => Command::Doppler,
            CommandArg::Sweep => Command::Sweep,
            CommandArg::Fit => Command::Fit,
            CommandArg::Toy => Command::Toy,
        }
    }
}

/// Atomic frequency comb quantum-memory simulator.
#[derive(Debug, Parser)]
#[command(name = "combforge", version)]
struct Args {
    #[arg(value_enum)]
    command: CommandArg,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [run] out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides [run] workers).
    #[arg(long)]
    workers: Option<usize>,
}

fn execute(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let command = Command::from(args.command);
    let raw = config::load(&args.config)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let plan = config::resolve(&raw, command, base, args.out.as_deref(), args.workers)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = plan.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let files = pool.install(|| commands::run(command, &plan))?;

    std::fs::create_dir_all(&plan.out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", plan.out.display())))?;
    files
        .into_iter()
        .map(|(name, body)| {
            let path = plan.out.join(name);
            std::fs::write(&path, body).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("combforge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
