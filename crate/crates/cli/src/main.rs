use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pantograph_cli::commands::{self, Exit, Outcome, Overrides};

/// Hybrid fractional pantograph equations: hypothesis checks, solver and
/// compactness diagnostics.
#[derive(Parser)]
#[command(name = "pantograph", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Number of grid points (overrides `grid_points`).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Picard stopping tolerance (overrides `tol`).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Iteration cap (overrides `max_iter`).
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    /// RNG seed for the increment check (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the hypotheses and search for a feasible radius.
    Check { file: PathBuf },
    /// Solve by Picard iteration and print the solution table.
    Solve {
        file: PathBuf,
        /// Write the `t,x` table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Modulus-of-continuity curves over the first Picard iterates.
    Diagnose { file: PathBuf },
    /// Run the built-in verification suite.
    Selftest,
}

fn run(cli: Cli) -> Result<Outcome, String> {
    let overrides = Overrides {
        grid_points: cli.grid,
        tol: cli.tol,
        max_iter: cli.max_iter,
        seed: cli.seed,
    };
    match cli.command {
        Command::Check { file } => commands::check(&commands::load(&file, &overrides)?),
        Command::Solve { file, out } => {
            let mut outcome = commands::solve_problem(&commands::load(&file, &overrides)?)?;
            let table = outcome.table.take().unwrap_or_default();
            match out {
                Some(path) => std::fs::write(&path, table)
                    .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
                None => {
                    // Summary goes to stderr so stdout stays a clean table.
                    eprint!("{}", outcome.stdout);
                    outcome.stdout = table;
                }
            }
            Ok(outcome)
        }
        Command::Diagnose { file } => commands::diagnose(&commands::load(&file, &overrides)?),
        Command::Selftest => Ok(commands::selftest()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.exit.code() as u8)
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(Exit::Input.code() as u8)
        }
    }
}
