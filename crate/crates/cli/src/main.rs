use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hat_cli::commands::EXIT_ERROR;
use hat_cli::{cmd_audit, cmd_compare, cmd_delta_study, cmd_run, CliResult};

/// HAT optimizer experiments.
///
/// Exit codes: 0 converged (or audit passed), 2 max_iters, 3 violation_halt
/// (or audit failed), 4 solver_failure, 1 configuration/data errors.
/// LIBSVM label map `mushrooms` sends 1 to +1 and 2 to -1.
#[derive(Parser)]
#[command(name = "hat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config and write its trace.
    Run { config: PathBuf },
    /// Run several configs on the same problem and merge their traces.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Merged long-format CSV `method,k,f,grad_norm,wall_nanos`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit a trace against the per-iteration guarantees.
    Audit {
        trace: PathBuf,
        /// Report path stem; `.json` and `.txt` are appended.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Record the relative inexactness of an estimator along a run.
    DeltaStudy { config: PathBuf },
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Compare { configs, out } => cmd_compare(&configs, &out),
        Command::Audit { trace, report } => cmd_audit(&trace, report.as_deref()),
        Command::DeltaStudy { config } => cmd_delta_study(&config),
    }
}

fn main() -> ExitCode {
    let code = match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("hat: error[{}]: {err}", err.kind());
            EXIT_ERROR
        }
    };
    ExitCode::from(code as u8)
}
