//! Reference optimizers: gradient descent with Armijo backtracking and a
//! Levenberg-shifted damped Newton method.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{HatError, Result};
use crate::hat::ConvexityMode;
use crate::numerics::{min_eigenvalue, solve_spd, DenseVector};
use crate::objectives::Objective;
use crate::trace::{versions, IterationRecord, StepClass, TraceFile, TraceMetadata, Verdict, SCHEMA_VERSION};

/// Halvings allowed before a line search is declared failed.
pub const MAX_BACKTRACKS: usize = 60;

/// Shift added on top of `-lambda_min` when the Hessian is not positive definite.
pub const NEWTON_SHIFT_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    GdBacktracking,
    DampedNewton,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::GdBacktracking => "gd-backtracking",
            BaselineKind::DampedNewton => "damped-newton",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    pub epsilon: f64,
    pub max_iters: usize,
    /// `Nonconvex` stops on `||g|| <= epsilon`, `Convex` on `f - f_star <= epsilon`.
    #[serde(default = "default_stopping")]
    pub stopping: ConvexityMode,
    #[serde(default = "default_armijo_c")]
    pub armijo_c: f64,
    #[serde(default = "default_backtrack")]
    pub backtrack_factor: f64,
    #[serde(default = "default_initial_step")]
    pub initial_step: f64,
}

fn default_stopping() -> ConvexityMode {
    ConvexityMode::Nonconvex
}
fn default_armijo_c() -> f64 {
    1e-4
}
fn default_backtrack() -> f64 {
    0.5
}
fn default_initial_step() -> f64 {
    1.0
}

impl BaselineConfig {
    pub fn new(kind: BaselineKind, epsilon: f64, max_iters: usize) -> Self {
        BaselineConfig {
            kind,
            epsilon,
            max_iters,
            stopping: ConvexityMode::Nonconvex,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            initial_step: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(HatError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(HatError::Config(format!("armijo_c must lie in (0, 1), got {}", self.armijo_c)));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(HatError::Config(format!(
                "backtrack_factor must lie in (0, 1), got {}",
                self.backtrack_factor
            )));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(HatError::Config(format!("initial_step must be positive, got {}", self.initial_step)));
        }
        if let ConvexityMode::Convex { f_star } = self.stopping {
            if !f_star.is_finite() {
                return Err(HatError::Config("f_star must be finite".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub final_x: DenseVector,
    pub records: Vec<IterationRecord>,
    pub verdict: Verdict,
    pub message: Option<String>,
    /// `x_0, ..., x_T`.
    pub iterates: Vec<DenseVector>,
    pub initial_f: f64,
    pub final_f: f64,
    pub final_grad_norm: f64,
}

impl BaselineRun {
    pub fn to_trace_file(&self, problem: &dyn Objective, cfg: &BaselineConfig, config: serde_json::Value) -> TraceFile {
        let n = self.records.len();
        let metadata = TraceMetadata {
            schema_version: SCHEMA_VERSION,
            method: cfg.kind.name().to_string(),
            problem: problem.name().to_string(),
            config,
            verdict: self.verdict,
            message: self.message.clone(),
            iterations: n,
            initial_f: self.initial_f,
            final_f: self.final_f,
            final_grad_norm: self.final_grad_norm,
            constants: None,
            r_min: None,
            eta_eff: None,
            count_f: 0,
            count_g: 0,
            count_violation: 0,
            bound_retries: 0,
            curvature: None,
            kkt: None,
            component_lipschitz: problem.constants().component_lipschitz,
            versions: versions(),
        };
        TraceFile { records: self.records.clone(), metadata }
    }
}

/// Runs the configured baseline from `x0`.
pub fn run_baseline(problem: &dyn Objective, cfg: &BaselineConfig, x0: &DenseVector) -> Result<BaselineRun> {
    cfg.validate()?;
    if x0.len() != problem.dim() {
        return Err(HatError::InvalidInput(format!(
            "start point has dimension {}, problem has {}",
            x0.len(),
            problem.dim()
        )));
    }
    if cfg.kind == BaselineKind::DampedNewton && !problem.has_hessian() {
        return Err(HatError::Config(format!("damped Newton needs the Hessian of `{}`", problem.name())));
    }
    let clock = Instant::now();
    let mut x = x0.clone();
    let mut f = problem.value(&x);
    let mut g = problem.gradient(&x);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(HatError::InvalidInput("objective is not finite at the start point".into()));
    }
    let initial_f = f;
    let mut iterates = vec![x.clone()];
    let mut records = Vec::new();
    let mut message = None;
    let mut k = 0;
    let verdict = loop {
        let g_norm = g.norm();
        let done = g_norm == 0.0
            || match cfg.stopping {
                ConvexityMode::Nonconvex => g_norm <= cfg.epsilon,
                ConvexityMode::Convex { f_star } => f - f_star <= cfg.epsilon,
            };
        if done {
            break Verdict::Converged;
        }
        if k >= cfg.max_iters {
            break Verdict::MaxIters;
        }
        let (direction, shift) = match cfg.kind {
            BaselineKind::GdBacktracking => (-&g, f64::NAN),
            BaselineKind::DampedNewton => newton_direction(problem, &x, &g)?,
        };
        let slope = g.dot(&direction);
        let mut t = cfg.initial_step;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            let trial = &x + &direction * t;
            let f_trial = problem.value(&trial);
            if f_trial.is_finite() && f_trial <= f + cfg.armijo_c * t * slope {
                accepted = Some((trial, f_trial));
                break;
            }
            t *= cfg.backtrack_factor;
        }
        let Some((x_next, f_next)) = accepted else {
            message = Some(format!("iteration {k}: Armijo line search failed after {MAX_BACKTRACKS} halvings"));
            break Verdict::SolverFailure;
        };
        records.push(IterationRecord {
            k,
            f,
            grad_norm: g_norm,
            deviation: f64::NAN,
            delta: f64::NAN,
            r_k: f64::NAN,
            a_k: f64::NAN,
            radius: f64::NAN,
            lambda: shift,
            step_norm: t * direction.norm(),
            on_boundary: false,
            step_class: StepClass::Unclassified,
            kkt_residual: f64::NAN,
            wall_nanos: clock.elapsed().as_nanos() as u64,
        });
        x = x_next;
        f = f_next;
        g = problem.gradient(&x);
        iterates.push(x.clone());
        k += 1;
    };
    let final_grad_norm = g.norm();
    Ok(BaselineRun { final_x: x, records, verdict, message, iterates, initial_f, final_f: f, final_grad_norm })
}

/// Solves `(hess f + tau I) d = -g`, with `tau = 0` when the Hessian is
/// positive definite and `max(0, -lambda_min) + 1e-8` otherwise.
fn newton_direction(problem: &dyn Objective, x: &DenseVector, g: &DenseVector) -> Result<(DenseVector, f64)> {
    let h = problem.hessian(x)?;
    let rhs = -g;
    match solve_spd(&h, &rhs) {
        Ok(d) => Ok((d, 0.0)),
        Err(HatError::SingularSystem { .. }) => {
            let tau = (-min_eigenvalue(&h)?).max(0.0) + NEWTON_SHIFT_MARGIN;
            let d = solve_spd(&h.shifted(tau), &rhs)?;
            Ok((d, tau))
        }
        Err(e) => Err(e),
    }
}
