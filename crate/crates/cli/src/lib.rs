//! Command-line experiment runner for the HAT optimizer.
//!
//! Subcommands `run`, `compare`, `audit` and `delta-study` read JSON configs
//! (see [`config::ExperimentConfig`]) and write CSV traces with JSON metadata.
//! Exit codes: 0 converged, 2 max_iters, 3 violation_halt (or a failed
//! audit), 4 solver_failure, 1 configuration, data or schema errors.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_audit, cmd_compare, cmd_delta_study, cmd_run, execute, execute_delta_study, RunOutcome};
pub use config::{load_config, parse_config, ExperimentConfig, LoadedConfig};
pub use error::{CliError, CliResult};
