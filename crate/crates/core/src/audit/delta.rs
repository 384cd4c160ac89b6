use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, BaselineConfig};
use crate::bregman::ScalingFunction;
use crate::error::{HatError, Result};
use crate::estimators::{deviation, HessianEstimator};
use crate::hat::{self, DeviationMode, HatConfig};
use crate::numerics::DenseVector;
use crate::objectives::Objective;
use crate::trace::format_float;

pub const DELTA_CSV_COLUMNS: &str = "k,f,grad_norm,deviation_true,delta,dist_to_final";

/// The optimizer whose iterates a delta study follows.
#[derive(Debug, Clone)]
pub enum DeltaDriver {
    /// HAT in oracle mode with the studied estimator.
    Hat { scaling: ScalingFunction, config: HatConfig },
    /// A baseline; the estimator is evaluated along its path.
    Baseline(BaselineConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub k: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub deviation_true: f64,
    pub delta: f64,
    /// `||x_k - x_T||` for the last iterate `x_T` of the study.
    pub dist_to_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSeries {
    pub rows: Vec<DeltaRow>,
    pub sup_delta: f64,
    pub argmax_k: Option<usize>,
    pub median_delta: f64,
    /// Largest delta over the last quarter of the rows.
    pub final_quarter_max: f64,
    pub final_f: f64,
}

impl DeltaSeries {
    pub fn from_rows(rows: Vec<DeltaRow>, final_f: f64) -> Self {
        let mut sup_delta = 0.0;
        let mut argmax_k = None;
        for r in &rows {
            if argmax_k.is_none() || r.delta > sup_delta || r.delta.is_nan() {
                sup_delta = r.delta;
                argmax_k = Some(r.k);
            }
        }
        let mut sorted: Vec<f64> = rows.iter().map(|r| r.delta).collect();
        sorted.sort_by(f64::total_cmp);
        let median_delta = match sorted.len() {
            0 => 0.0,
            n if n % 2 == 1 => sorted[n / 2],
            n => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
        };
        let start = rows.len() - rows.len() / 4;
        let final_quarter_max = rows[start.min(rows.len())..].iter().map(|r| r.delta).fold(0.0, f64::max);
        DeltaSeries { rows, sup_delta, argmax_k, median_delta, final_quarter_max, final_f }
    }

    /// Largest mismatch between the stored delta and `deviation / sqrt(grad_norm)`,
    /// relative to the stored value.
    pub fn recomputation_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| {
                let recomputed = r.deviation_true / r.grad_norm.sqrt();
                (recomputed - r.delta).abs() / r.delta.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    pub fn csv_string(&self) -> String {
        let mut out = String::from(DELTA_CSV_COLUMNS);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.k,
                format_float(r.f),
                format_float(r.grad_norm),
                format_float(r.deviation_true),
                format_float(r.delta),
                format_float(r.dist_to_final)
            );
        }
        out
    }
}

/// Follows `driver` for at most `iters` iterations and records the true
/// deviation `||hess f(x_k) - H_k||` of `estimator` at every iterate.
pub fn delta_study(
    problem: &dyn Objective,
    estimator: &mut dyn HessianEstimator,
    driver: &DeltaDriver,
    iters: usize,
    x0: &DenseVector,
) -> Result<DeltaSeries> {
    if !problem.has_hessian() {
        return Err(HatError::Config(format!(
            "delta study needs the Hessian oracle of `{}`",
            problem.name()
        )));
    }
    let mut rows = Vec::new();
    let (iterates, final_f) = match driver {
        DeltaDriver::Hat { scaling, config } => {
            let mut cfg = config.clone();
            cfg.deviation_mode = DeviationMode::Oracle;
            cfg.max_iters = iters;
            let run = hat::run(problem, scaling, estimator, &cfg, x0)?;
            for r in &run.records {
                rows.push(DeltaRow {
                    k: r.k,
                    f: r.f,
                    grad_norm: r.grad_norm,
                    deviation_true: r.deviation,
                    delta: r.delta,
                    dist_to_final: 0.0,
                });
            }
            (run.iterates, run.final_f)
        }
        DeltaDriver::Baseline(config) => {
            let mut cfg = config.clone();
            cfg.max_iters = iters;
            let run = run_baseline(problem, &cfg, x0)?;
            let mut g = problem.gradient(&run.iterates[0]);
            for (k, pair) in run.iterates.windows(2).enumerate() {
                let x = &pair[0];
                let g_norm = g.norm();
                let h = estimator.produce(k, x, &g, problem)?;
                let dev = deviation(&h, &problem.hessian(x)?)?;
                rows.push(DeltaRow {
                    k,
                    f: run.records[k].f,
                    grad_norm: g_norm,
                    deviation_true: dev,
                    delta: dev / g_norm.sqrt(),
                    dist_to_final: 0.0,
                });
                let g_next = problem.gradient(&pair[1]);
                estimator.observe_step(&(&pair[1] - x), &(&g_next - &g));
                g = g_next;
            }
            (run.iterates, run.final_f)
        }
    };
    let last = iterates.last().expect("a run has at least its start point");
    for (row, x) in rows.iter_mut().zip(&iterates) {
        row.dist_to_final = (x - last).norm();
    }
    Ok(DeltaSeries::from_rows(rows, final_f))
}
