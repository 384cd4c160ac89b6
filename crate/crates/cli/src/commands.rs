use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hat_core::audit::{delta_study, theory_report, DeltaDriver, DeltaSeries};
use hat_core::baselines::run_baseline;
use hat_core::hat::run;
use hat_core::trace::{format_float, TraceFile, Verdict};
use hat_core::HatError;
use rayon::prelude::*;

use crate::config::{load_config, LoadedConfig, OptimizerSpec};
use crate::error::{CliError, CliResult};

/// Exit code for configuration, data and schema errors.
pub const EXIT_ERROR: i32 = 1;

/// Exit code of `audit` when a trace fails an applicable check.
pub const EXIT_AUDIT_FAILED: i32 = 3;

pub const MERGED_CSV_COLUMNS: &str = "method,k,f,grad_norm,wall_nanos";

/// Outcome of a single configured run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub method: String,
    pub trace: TraceFile,
    pub trace_path: Option<PathBuf>,
}

impl RunOutcome {
    pub fn verdict(&self) -> Verdict {
        self.trace.metadata.verdict
    }
}

/// Executes a loaded config without touching the file system.
pub fn execute(loaded: &LoadedConfig) -> CliResult<RunOutcome> {
    let problem = loaded.build_problem()?;
    let x0 = loaded.start(problem.as_ref())?;
    let method = loaded.method_name();
    let trace = match &loaded.config.optimizer {
        OptimizerSpec::Hat(cfg) => {
            let mut cfg = cfg.clone();
            cfg.seed = loaded.config.seed;
            let scaling = loaded.build_scaling(problem.dim())?;
            let mut estimator = loaded.build_estimator()?;
            let r = run(problem.as_ref(), &scaling, estimator.as_mut(), &cfg, &x0)?;
            r.to_trace_file(&method, problem.as_ref(), &scaling, &cfg, loaded.echo.clone())
        }
        OptimizerSpec::Baseline(cfg) => {
            if loaded.config.estimator.is_some() {
                return Err(HatError::Config("baselines take no `estimator` section".into()).into());
            }
            let r = run_baseline(problem.as_ref(), cfg, &x0)?;
            let mut t = r.to_trace_file(problem.as_ref(), cfg, loaded.echo.clone());
            t.metadata.method = method.clone();
            t
        }
    };
    let trace_path = loaded.config.output.trace.as_ref().map(|p| loaded.resolve(p));
    Ok(RunOutcome { method, trace, trace_path })
}

fn write_trace(outcome: &RunOutcome) -> CliResult<()> {
    if let Some(path) = &outcome.trace_path {
        ensure_parent(path)?;
        outcome.trace.write(path)?;
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

/// `path` with `.ext` appended (not substituted for an existing extension).
fn with_suffix(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn report_verdict(outcome: &RunOutcome) {
    let meta = &outcome.trace.metadata;
    eprintln!(
        "{}: {} after {} iterations, f = {}, |g| = {}",
        outcome.method,
        meta.verdict.as_str(),
        meta.iterations,
        format_float(meta.final_f),
        format_float(meta.final_grad_norm)
    );
    if let Some(msg) = &meta.message {
        eprintln!("{}: {}", outcome.method, msg);
    }
}

/// `hat run CONFIG`: exit code from the run verdict.
pub fn cmd_run(config: &Path) -> CliResult<i32> {
    let loaded = load_config(config)?;
    let outcome = execute(&loaded)?;
    write_trace(&outcome)?;
    report_verdict(&outcome);
    Ok(outcome.verdict().exit_code())
}

/// Long-format CSV `method,k,f,grad_norm,wall_nanos` over several runs.
pub fn merged_csv(outcomes: &[RunOutcome]) -> String {
    let mut out = String::from(MERGED_CSV_COLUMNS);
    out.push('\n');
    for o in outcomes {
        for r in &o.trace.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                o.method,
                r.k,
                format_float(r.f),
                format_float(r.grad_norm),
                r.wall_nanos
            );
        }
    }
    out
}

/// `hat compare CONFIG... --out MERGED`: runs every config on a worker pool.
/// Exit code is the largest of the per-run codes.
pub fn cmd_compare(configs: &[PathBuf], merged: &Path) -> CliResult<i32> {
    if configs.len() < 2 {
        return Err(CliError::Usage(format!("compare needs at least 2 configs, got {}", configs.len())));
    }
    let loaded = configs.iter().map(|p| load_config(p)).collect::<CliResult<Vec<_>>>()?;
    let reference = loaded[0].resolved_problem();
    if let Some(other) = loaded.iter().find(|l| l.resolved_problem() != reference) {
        return Err(CliError::Config {
            path: other.path.display().to_string(),
            message: format!("problem spec differs from {}", loaded[0].path.display()),
        });
    }
    let outcomes = loaded.par_iter().map(execute).collect::<CliResult<Vec<_>>>()?;
    for o in &outcomes {
        write_trace(o)?;
        report_verdict(o);
    }
    write_text(merged, &merged_csv(&outcomes))?;
    Ok(outcomes.iter().map(|o| o.verdict().exit_code()).max().unwrap_or(0))
}

/// `hat audit TRACE`: writes `<trace>.audit.json` and `<trace>.audit.txt`
/// (or `<report>.json`/`.txt`), prints the text summary, exits 0 iff every
/// applicable check passes.
pub fn cmd_audit(trace_path: &Path, report: Option<&Path>) -> CliResult<i32> {
    let trace = TraceFile::read(trace_path)?;
    let report_data = theory_report(&trace);
    let stem = match report {
        Some(p) => p.to_path_buf(),
        None => trace_path.with_extension("audit"),
    };
    let text = report_data.to_text();
    write_text(&with_suffix(&stem, "json"), &(report_data.to_json() + "\n"))?;
    write_text(&with_suffix(&stem, "txt"), &text)?;
    print!("{text}");
    Ok(if report_data.passed { 0 } else { EXIT_AUDIT_FAILED })
}

/// Runs the configured delta study without writing anything.
pub fn execute_delta_study(loaded: &LoadedConfig) -> CliResult<DeltaSeries> {
    let spec = loaded
        .config
        .delta_study
        .as_ref()
        .ok_or_else(|| HatError::Config("a `delta_study` section is required".into()))?;
    let problem = loaded.build_problem()?;
    let x0 = loaded.start(problem.as_ref())?;
    let driver = match &loaded.config.optimizer {
        OptimizerSpec::Hat(cfg) => {
            let mut config = cfg.clone();
            config.seed = loaded.config.seed;
            DeltaDriver::Hat { scaling: loaded.build_scaling(problem.dim())?, config }
        }
        OptimizerSpec::Baseline(cfg) => DeltaDriver::Baseline(cfg.clone()),
    };
    let mut estimator = loaded.build_estimator()?;
    Ok(delta_study(problem.as_ref(), estimator.as_mut(), &driver, spec.iters, &x0)?)
}

/// `hat delta-study CONFIG`: writes the delta CSV named by `output.delta`.
pub fn cmd_delta_study(config: &Path) -> CliResult<i32> {
    let loaded = load_config(config)?;
    let out = loaded
        .config
        .output
        .delta
        .as_ref()
        .map(|p| loaded.resolve(p))
        .ok_or_else(|| HatError::Config("`output.delta` is required for a delta study".into()))?;
    let series = execute_delta_study(&loaded)?;
    write_text(&out, &series.csv_string())?;
    eprintln!(
        "delta study: {} rows, sup {} at k = {:?}, median {}, final-quarter max {}",
        series.rows.len(),
        format_float(series.sup_delta),
        series.argmax_k,
        format_float(series.median_delta),
        format_float(series.final_quarter_max)
    );
    Ok(0)
}
