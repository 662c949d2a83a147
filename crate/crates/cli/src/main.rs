//! `fpa`: batch front end for the kinetic solver, the particle simulator and
//! the assumption and decay diagnostics.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 structural
//! assumption failure under a hard gate, 3 numerical abort.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fpa", version, about = "Kinetic Fokker-Planck-Alignment solver and diagnostics")]
struct Cli {
    /// Worker threads for the data-parallel kernels (default: all cores).
    #[arg(long, global = true, env = "FPA_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the kinetic equation and write snapshots, series.csv,
    /// assumptions.json and fit.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `io.out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the agent system and write moments.csv and ensemble files.
    Particles {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the four structural assumptions on a snapshot or the
    /// configured initial density.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// FPA1 snapshot to audit instead of the configured preset.
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit `H(t) ~ C exp(-delta t)` on `[t0, t1]` of a series CSV.
    Fit {
        series: PathBuf,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        /// Directory for fit.json (default: next to the series).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        fpa_core::exec::init_threads(n);
    }

    let outcome = match cli.command {
        Command::Solve { config, out } => commands::solve(&config, out),
        Command::Particles { config, out } => commands::particles(&config, out),
        Command::Check { config, snapshot, out } => commands::check(&config, snapshot, out),
        Command::Fit { series, t0, t1, out } => commands::fit(&series, t0, t1, out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
