//! Persisted trace schema: one CSV row per iteration plus JSON metadata.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HatError, Result};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 14] = [
    "k", "f", "grad_norm", "deviation", "delta", "r_k", "A_k", "radius", "lambda", "step_norm",
    "on_boundary", "step_class", "kkt_residual", "wall_nanos",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepClass {
    ValueDecrease,
    GradDecrease,
    Violation,
    /// Baseline steps, which carry no schedule.
    Unclassified,
}

impl StepClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StepClass::ValueDecrease => "value-decrease",
            StepClass::GradDecrease => "grad-decrease",
            StepClass::Violation => "violation",
            StepClass::Unclassified => "unclassified",
        }
    }
}

impl fmt::Display for StepClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StepClass {
    type Err = HatError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "value-decrease" => StepClass::ValueDecrease,
            "grad-decrease" => StepClass::GradDecrease,
            "violation" => StepClass::Violation,
            "unclassified" => StepClass::Unclassified,
            other => {
                return Err(HatError::Format {
                    column: "step_class".into(),
                    message: format!("unknown step class `{other}`"),
                })
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    MaxIters,
    ViolationHalt,
    SolverFailure,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::MaxIters => "max_iters",
            Verdict::ViolationHalt => "violation_halt",
            Verdict::SolverFailure => "solver_failure",
        }
    }

    /// Process exit code reported by the command-line runner.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Converged => 0,
            Verdict::MaxIters => 2,
            Verdict::ViolationHalt => 3,
            Verdict::SolverFailure => 4,
        }
    }
}

/// One iteration: the state at `x_k` and the step taken from it. Baseline
/// runs fill the schedule columns with NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub deviation: f64,
    pub delta: f64,
    pub r_k: f64,
    pub a_k: f64,
    pub radius: f64,
    pub lambda: f64,
    pub step_norm: f64,
    pub on_boundary: bool,
    pub step_class: StepClass,
    pub kkt_residual: f64,
    /// Nanoseconds since the start of the run, at the end of the iteration.
    pub wall_nanos: u64,
}

impl IterationRecord {
    /// Equality of every column except the wall clock, bit for bit.
    pub fn same_numbers(&self, other: &IterationRecord) -> bool {
        let bits = |r: &IterationRecord| {
            [r.f, r.grad_norm, r.deviation, r.delta, r.r_k, r.a_k, r.radius, r.lambda, r.step_norm, r.kkt_residual]
                .map(f64::to_bits)
        };
        self.k == other.k
            && bits(self) == bits(other)
            && self.on_boundary == other.on_boundary
            && self.step_class == other.step_class
    }
}

/// Decimal form with 17 significant digits, which round-trips every `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_csv<W: Write>(mut out: W, records: &[IterationRecord]) -> Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for r in records {
        let floats = [r.f, r.grad_norm, r.deviation, r.delta, r.r_k, r.a_k, r.radius, r.lambda, r.step_norm]
            .map(format_float)
            .join(",");
        writeln!(
            out,
            "{},{floats},{},{},{},{}",
            r.k,
            r.on_boundary,
            r.step_class,
            format_float(r.kkt_residual),
            r.wall_nanos
        )?;
    }
    Ok(())
}

pub fn csv_string(records: &[IterationRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("trace CSV is ASCII")
}

fn field<T: FromStr>(column: &str, line: usize, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| HatError::Format {
        column: column.into(),
        message: format!("row {line}: cannot parse `{raw}`"),
    })
}

/// Parses trace CSV; the header must match [`CSV_COLUMNS`] exactly and `k`
/// must be strictly increasing.
pub fn parse_csv(text: &str) -> Result<Vec<IterationRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| HatError::Format {
        column: "header".into(),
        message: "empty trace file".into(),
    })?;
    let names: Vec<&str> = header.trim().split(',').collect();
    for (i, expected) in CSV_COLUMNS.iter().enumerate() {
        match names.get(i) {
            Some(name) if name == expected => {}
            Some(name) => {
                return Err(HatError::Format {
                    column: (*expected).into(),
                    message: format!("header has `{name}` in position {i}"),
                })
            }
            None => {
                return Err(HatError::Format { column: (*expected).into(), message: "missing from header".into() })
            }
        }
    }
    if names.len() > CSV_COLUMNS.len() {
        return Err(HatError::Format {
            column: names[CSV_COLUMNS.len()].into(),
            message: "unexpected extra column".into(),
        });
    }

    let mut records: Vec<IterationRecord> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let cells: Vec<&str> = line.trim().split(',').collect();
        if cells.len() != CSV_COLUMNS.len() {
            return Err(HatError::Format {
                column: CSV_COLUMNS.get(cells.len()).unwrap_or(&"wall_nanos").to_string(),
                message: format!("row {line_no} has {} cells, expected {}", cells.len(), CSV_COLUMNS.len()),
            });
        }
        let num = |i: usize| field::<f64>(CSV_COLUMNS[i], line_no, cells[i]);
        let rec = IterationRecord {
            k: field(CSV_COLUMNS[0], line_no, cells[0])?,
            f: num(1)?,
            grad_norm: num(2)?,
            deviation: num(3)?,
            delta: num(4)?,
            r_k: num(5)?,
            a_k: num(6)?,
            radius: num(7)?,
            lambda: num(8)?,
            step_norm: num(9)?,
            on_boundary: field(CSV_COLUMNS[10], line_no, cells[10])?,
            step_class: cells[11].parse()?,
            kkt_residual: num(12)?,
            wall_nanos: field(CSV_COLUMNS[13], line_no, cells[13])?,
        };
        if let Some(prev) = records.last() {
            if rec.k <= prev.k {
                return Err(HatError::Format {
                    column: "k".into(),
                    message: format!("row {line_no}: k = {} does not increase (previous {})", rec.k, prev.k),
                });
            }
        }
        records.push(rec);
    }
    Ok(records)
}

/// Constants a trace was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConstants {
    pub l2: f64,
    pub sigma_v: f64,
    pub l_v: f64,
    pub eta: f64,
    pub xi: f64,
    pub epsilon: f64,
    pub convex: bool,
    pub f_star: Option<f64>,
    /// Deviation mode: `"oracle"` or `"bound"`.
    pub deviation_mode: String,
}

/// Per-iteration data behind the convex-mode checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureHistory {
    pub h_min_eigs: Vec<f64>,
    pub h_norms: Vec<f64>,
    /// `max_k ||x_k - x_T||` over the run.
    pub d_proxy: f64,
}

/// Worst KKT residuals over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KktSummary {
    pub max_primal_feas: f64,
    pub max_comp_slack: f64,
    pub max_relative_stationarity: f64,
    /// Smallest `lambda_min / ||H||` seen (0 when `H = 0`).
    pub min_relative_second_order: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMetadata {
    pub schema_version: u32,
    pub method: String,
    pub problem: String,
    pub config: serde_json::Value,
    pub verdict: Verdict,
    pub message: Option<String>,
    pub iterations: usize,
    pub initial_f: f64,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub constants: Option<TraceConstants>,
    pub r_min: Option<f64>,
    pub eta_eff: Option<f64>,
    pub count_f: usize,
    pub count_g: usize,
    pub count_violation: usize,
    pub bound_retries: usize,
    pub curvature: Option<CurvatureHistory>,
    pub kkt: Option<KktSummary>,
    pub component_lipschitz: Option<f64>,
    pub versions: std::collections::BTreeMap<String, String>,
}

/// Companion metadata path: the CSV path with a `.json` extension.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn parse_metadata(text: &str) -> Result<TraceMetadata> {
    let meta: TraceMetadata = serde_json::from_str(text).map_err(|e| HatError::Format {
        column: "metadata".into(),
        message: e.to_string(),
    })?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(HatError::Format {
            column: "schema_version".into(),
            message: format!("expected {SCHEMA_VERSION}, found {}", meta.schema_version),
        });
    }
    Ok(meta)
}

/// A trace as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub records: Vec<IterationRecord>,
    pub metadata: TraceMetadata,
}

impl TraceFile {
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        let file = std::fs::File::create(csv_path)?;
        write_csv(std::io::BufWriter::new(file), &self.records)?;
        let json = serde_json::to_string_pretty(&self.metadata).map_err(|e| HatError::Io(e.to_string()))?;
        std::fs::write(metadata_path(csv_path), json + "\n")?;
        Ok(())
    }

    pub fn read(csv_path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(csv_path).map_err(|e| HatError::Io(format!("{}: {e}", csv_path.display())))?;
        let records = parse_csv(&text)?;
        let meta_path = metadata_path(csv_path);
        let meta = std::fs::read_to_string(&meta_path).map_err(|e| HatError::Io(format!("{}: {e}", meta_path.display())))?;
        Ok(TraceFile { records, metadata: parse_metadata(&meta)? })
    }
}

/// Crate name and version, recorded in trace metadata.
pub fn versions() -> std::collections::BTreeMap<String, String> {
    [(env!("CARGO_PKG_NAME").to_string(), env!("CARGO_PKG_VERSION").to_string())].into()
}
