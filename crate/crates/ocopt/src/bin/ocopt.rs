//! Experiment runner: solve configured problems, verify the solver
//! machinery against reference solvers, sweep convergence-rate grids, and
//! list the builtin problem families.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ocopt::cli::{cmd_list, cmd_rates, cmd_solve, cmd_verify, FormatOpt, GlobalOpts};

#[derive(Parser)]
#[command(
    name = "ocopt",
    version,
    about = "Runner for control-derived Newton-type optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides the config's outputs.dir)
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Seed override for randomized problem families
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent runs (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Which report files to write (overrides the config's outputs.formats)
    #[arg(long, global = true, value_enum)]
    format: Option<FormatOpt>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured solvers and write trajectories plus a report
    Solve { config: PathBuf },
    /// Check solver output against independent reference solvers
    Verify { config: PathBuf },
    /// Sweep (r, N) and tabulate predicted vs measured convergence rates
    Rates { config: PathBuf },
    /// List builtin problems and solver kinds
    List,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let opts = GlobalOpts {
        out_dir: cli.out_dir,
        seed: cli.seed,
        jobs: cli.jobs,
        format: cli.format,
    };
    let result = match &cli.command {
        Command::Solve { config } => cmd_solve(config, &opts),
        Command::Verify { config } => cmd_verify(config, &opts),
        Command::Rates { config } => cmd_rates(config, &opts),
        Command::List => cmd_list(opts.format),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
