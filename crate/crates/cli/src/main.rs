//! `ringred`: command-line front end for the spike-ring numerics.
//!
//! Every command reads an optional JSON config (`--config`), writes its
//! tables into `--out`, prints a JSON summary on stdout, and on failure
//! prints a JSON error record on stderr with exit code 2 (invalid input) or
//! 3 (numerical failure).

mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, Format};
use failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "ringred", version, about = "Spike-ring ground states, balancing, reduced operators and energy scans")]
struct Cli {
    /// JSON config for the command; defaults apply to omitted keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Format of the main output table
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve (or load from cache) the radial ground state and its constants
    GroundState,
    /// Balance spacing and radius over a list of ring sizes
    BalanceSweep,
    /// Closed-form spectrum and inertia of the reduced operator
    Spectrum,
    /// Discrete against continuum solutions over a list of ring sizes
    CompareContinuum,
    /// Scan the reduced energy over the ring's rotation angle
    EnergyScan,
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::validation("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::numerical(e.to_string()))?;
    }
    let ctx = Ctx { out: cli.out, format: cli.format };
    let path = cli.config.as_deref();
    match cli.command {
        Command::GroundState => commands::ground_state(&ctx, config::load(path)?),
        Command::BalanceSweep => commands::balance_sweep(&ctx, config::load(path)?),
        Command::Spectrum => commands::spectrum(&ctx, config::load(path)?),
        Command::CompareContinuum => commands::compare_continuum(&ctx, config::load(path)?),
        Command::EnergyScan => commands::energy_scan(&ctx, config::load(path)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let f = Failure::validation(e.to_string().trim_end().to_string());
            eprintln!("{}", f.to_json());
            return ExitCode::from(f.code);
        }
        Err(e) => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.code)
        }
    }
}
