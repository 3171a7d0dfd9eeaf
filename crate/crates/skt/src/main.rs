use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skt::commands::{cmd_compare, cmd_solve_fd, cmd_solve_mc, cmd_verify};
use skt::config::{Mode, Overrides, RunConfig};
use skt::exec::Pool;
use skt::CliError;

/// Monte Carlo and finite-difference solvers for the SKT cross-diffusion
/// system.
///
/// Exit codes: 0 success, 1 configuration error, 2 numerical failure,
/// 3 failed check.
#[derive(Debug, Parser)]
#[command(name = "skt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo solve (layered, or fixed-point with --mode picard).
    SolveMc(Common),
    /// Explicit finite-difference reference solve.
    SolveFd(Common),
    /// Run the verification checks and write report.json.
    Verify(Common),
    /// Solve with both methods and compare them.
    Compare(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: [output] dir, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding [solver] seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Debug: use c − (∇M)² instead of c + (∇M)² in the functional.
    #[arg(long)]
    flip_correction_sign: bool,
    /// Write progress.jsonl with one record per layer or iteration.
    #[arg(long)]
    progress: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::SolveMc(c) | Command::SolveFd(c) | Command::Verify(c) | Command::Compare(c)) = &cli.command;
    let overrides = Overrides {
        seed: c.seed,
        mode: c.mode,
        out_dir: c.out.clone(),
        flip_correction_sign: c.flip_correction_sign,
        progress: c.progress,
    };
    let cfg = RunConfig::load(&c.config, &overrides)?;
    let pool = Pool::new(c.workers).map_err(|e| CliError::config(format!("cannot start workers: {e}")))?;
    match cli.command {
        Command::SolveMc(_) => cmd_solve_mc(&cfg, &pool, pool.workers()),
        Command::SolveFd(_) => cmd_solve_fd(&cfg),
        Command::Verify(_) => cmd_verify(&cfg, &pool),
        Command::Compare(_) => cmd_compare(&cfg, &pool),
    }
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
