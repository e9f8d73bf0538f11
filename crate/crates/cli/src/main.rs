use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gnse_cli::commands::{cmd_control, cmd_eig, cmd_solve, resolve_output};
use gnse_cli::verify::{print_table, run_suite, VerifyOptions};
use gnse_cli::{CliError, Exit, RunConfig, CONFIG_HELP};

#[derive(Parser)]
#[command(name = "gnse", version, about = "Time-fractional g-Navier-Stokes Galerkin solver", after_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suite and print a table; exit 0 iff every check passes.
    Verify {
        /// Only run checks of one module (fracops, wdomain, spectral, solver, control).
        #[arg(long)]
        filter: Option<String>,
        /// Optional config; it is parsed and validated but does not change the checks.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compute the g-Stokes eigenbasis; writes spectrum.csv, mode_k.csv, hg_check.txt.
    Eig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Forward solve with energy certificates; writes trajectory, diagnostics,
    /// certificate CSVs and manifest.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Projected-descent control run; writes control_log.csv, w_opt.csv and the final trajectory.
    Control {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<Exit, CliError> {
    match cli.command {
        Command::Verify { filter, config } => {
            if let Some(path) = config {
                RunConfig::load(&path)?;
            }
            let checks = run_suite(filter.as_deref(), VerifyOptions::default());
            if checks.is_empty() {
                return Err(CliError::Io(format!("no checks match filter {:?}", filter.unwrap_or_default())));
            }
            print_table(&checks);
            Ok(if checks.iter().all(|c| c.pass) { Exit::Ok } else { Exit::Error })
        }
        Command::Eig { config } => {
            let cfg = RunConfig::load(&config)?;
            cmd_eig(&cfg, &resolve_output(&cfg))
        }
        Command::Solve { config } => {
            let cfg = RunConfig::load(&config)?;
            cmd_solve(&cfg, &resolve_output(&cfg))
        }
        Command::Control { config } => {
            let cfg = RunConfig::load(&config)?;
            cmd_control(&cfg, &resolve_output(&cfg))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Exit::Error as u8)
        }
    }
}
