//! The HAT optimizer: schedule, subproblem dispatch, step classification and
//! the iteration loop.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bregman::ScalingFunction;
use crate::error::{HatError, Result};
use crate::estimators::{deviation, HessianEstimator, InexactnessBound};
use crate::numerics::{eigenvalues, DenseVector, SymmetricMatrix};
use crate::objectives::Objective;
use crate::subproblem::{check_kkt, solve, KktReport, TrustRegionModel};
use crate::trace::{
    versions, CurvatureHistory, IterationRecord, KktSummary, StepClass, TraceConstants, TraceFile, TraceMetadata, Verdict,
    SCHEMA_VERSION,
};

mod audits;

pub use audits::{
    audit_convex_conditions, audit_iteration_counts, BoundCheck, BoundStatus, ConvexConditionReport, CountAuditInput,
    CountReport,
};

/// Upper bound on `xi` in convex mode, `(sqrt 5 - 1) / 2`.
pub const CONVEX_XI_MAX: f64 = 0.618_033_988_749_894_8;

/// Relative slack used by the step classification and the descent check.
pub const CLASSIFICATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DeviationMode {
    /// The true `||hess f(x_k) - H_k||` from the Hessian oracle.
    Oracle,
    /// The declared bound `m ||g_k||^beta`.
    Bound(InexactnessBound),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ConvexityMode {
    /// Stop at `||g|| <= epsilon`.
    Nonconvex,
    /// Stop at `f - f_star <= epsilon`.
    Convex { f_star: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HatConfig {
    pub eta: f64,
    pub xi: f64,
    pub deviation_mode: DeviationMode,
    pub convexity: ConvexityMode,
    pub epsilon: f64,
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
    /// Run the KKT certificate on every subproblem solution.
    #[serde(default = "default_true")]
    pub certify_kkt: bool,
}

fn default_true() -> bool {
    true
}

impl HatConfig {
    pub fn new(eta: f64, xi: f64, epsilon: f64, max_iters: usize) -> Self {
        HatConfig {
            eta,
            xi,
            deviation_mode: DeviationMode::Oracle,
            convexity: ConvexityMode::Nonconvex,
            epsilon,
            max_iters,
            seed: 0,
            certify_kkt: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(HatError::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(HatError::Config(format!("xi must lie in (0, 1), got {}", self.xi)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(HatError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let ConvexityMode::Convex { f_star } = self.convexity {
            if !f_star.is_finite() {
                return Err(HatError::Config("convex mode needs a finite f_star".into()));
            }
            if self.xi > CONVEX_XI_MAX {
                return Err(HatError::Config(format!(
                    "convex mode needs xi <= (sqrt 5 - 1)/2, got {}",
                    self.xi
                )));
            }
        }
        Ok(())
    }
}

/// `(r_k, A_k)` for the current gradient norm and Hessian deviation.
pub fn schedule(g_norm: f64, deviation: f64, cfg: &HatConfig, scaling: &ScalingFunction, l2: f64) -> Result<(f64, f64)> {
    if !(g_norm > 0.0) {
        return Err(HatError::Precondition(format!("schedule needs a positive gradient norm, got {g_norm}")));
    }
    if !(deviation >= 0.0 && deviation.is_finite() && l2 >= 0.0 && l2.is_finite()) {
        return Err(HatError::Precondition(format!(
            "schedule needs finite deviation >= 0 and L2 >= 0, got {deviation} and {l2}"
        )));
    }
    let (sv, lv) = (scaling.sigma_v(), scaling.l_v());
    let gap = 2.0 * sv - lv;
    if gap <= 0.0 {
        return Err(HatError::Constants { sigma_v: sv, l_v: lv });
    }
    let root_g = g_norm.sqrt();
    let inner = 2.0 * cfg.eta + l2 / 3.0;
    let dev_prime = deviation / root_g * (1.0 + lv / gap);
    let a = l2 / 2.0 + lv * inner / gap;
    let r = cfg.xi / (dev_prime + (a * cfg.xi).sqrt());
    let big_a = deviation / gap + r * root_g * inner / gap;
    Ok((r, big_a))
}

/// Residual of `(2 sigma_v - l_v) A_k = deviation + r_k sqrt(g) (2 eta + L2/3)`,
/// relative to the larger side.
#[allow(clippy::too_many_arguments)]
pub fn schedule_identity_residual(
    g_norm: f64,
    deviation: f64,
    r_k: f64,
    a_k: f64,
    eta: f64,
    l2: f64,
    sigma_v: f64,
    l_v: f64,
) -> f64 {
    let lhs = (2.0 * sigma_v - l_v) * a_k;
    let rhs = deviation + r_k * g_norm.sqrt() * (2.0 * eta + l2 / 3.0);
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE)
}

/// The deviation fed to the schedule.
pub fn deviation_for_schedule(
    x: &DenseVector,
    g_norm: f64,
    h: &SymmetricMatrix,
    problem: &dyn Objective,
    cfg: &HatConfig,
) -> Result<f64> {
    match cfg.deviation_mode {
        DeviationMode::Oracle => {
            if !problem.has_hessian() {
                return Err(HatError::Config(format!(
                    "oracle deviation mode needs the Hessian of `{}`",
                    problem.name()
                )));
            }
            deviation(h, &problem.hessian(x)?)
        }
        DeviationMode::Bound(b) => Ok(b.evaluate(g_norm)),
    }
}

/// Value decrease `f_next - f_k <= -eta r^3 g^{3/2}` takes precedence over
/// gradient decrease `g_next <= xi g`; both with slack `1e-9 (1 + |f_k|)`.
pub fn classify_step(f_k: f64, f_next: f64, g_k: f64, g_next: f64, r_k: f64, eta: f64, xi: f64) -> StepClass {
    let slack = CLASSIFICATION_SLACK * (1.0 + f_k.abs());
    if f_next - f_k <= -eta * r_k.powi(3) * g_k.powf(1.5) + slack {
        StepClass::ValueDecrease
    } else if g_next <= xi * g_k + slack {
        StepClass::GradDecrease
    } else {
        StepClass::Violation
    }
}

/// Outcome of a run.
#[derive(Debug, Clone)]
pub struct HatRun {
    pub final_x: DenseVector,
    pub records: Vec<IterationRecord>,
    pub verdict: Verdict,
    pub message: Option<String>,
    /// `x_0, ..., x_T`.
    pub iterates: Vec<DenseVector>,
    pub h_min_eigs: Vec<f64>,
    pub h_norms: Vec<f64>,
    pub kkt: Vec<KktReport>,
    pub bound_retries: usize,
    pub initial_f: f64,
    pub final_f: f64,
    pub final_grad_norm: f64,
}

impl HatRun {
    /// `max_k ||x_k - x_T||`.
    pub fn d_proxy(&self) -> f64 {
        let last = self.iterates.last().expect("a run has at least its start point");
        self.iterates.iter().map(|x| (x - last).norm()).fold(0.0, f64::max)
    }

    pub fn kkt_summary(&self) -> Option<KktSummary> {
        if self.kkt.is_empty() {
            return None;
        }
        let mut s = KktSummary {
            max_primal_feas: 0.0,
            max_comp_slack: 0.0,
            max_relative_stationarity: 0.0,
            min_relative_second_order: f64::INFINITY,
        };
        for r in &self.kkt {
            s.max_primal_feas = s.max_primal_feas.max(r.primal_feas);
            s.max_comp_slack = s.max_comp_slack.max(r.comp_slack);
            s.max_relative_stationarity = s.max_relative_stationarity.max(r.relative_stationarity());
            let rel = if r.h_norm > 0.0 { r.second_order_psd_min_eig / r.h_norm } else { 0.0 };
            s.min_relative_second_order = s.min_relative_second_order.min(rel);
        }
        Some(s)
    }
}

impl HatRun {
    /// Packages the run as a persisted trace. `config` is echoed verbatim.
    pub fn to_trace_file(
        &self,
        method: &str,
        problem: &dyn Objective,
        scaling: &ScalingFunction,
        cfg: &HatConfig,
        config: serde_json::Value,
    ) -> TraceFile {
        let pc = problem.constants();
        let (convex, f_star) = match cfg.convexity {
            ConvexityMode::Nonconvex => (false, pc.f_star),
            ConvexityMode::Convex { f_star } => (true, Some(f_star)),
        };
        let count = |c: StepClass| self.records.iter().filter(|r| r.step_class == c).count();
        let r_min = self.records.iter().map(|r| r.r_k).reduce(f64::min);
        let metadata = TraceMetadata {
            schema_version: SCHEMA_VERSION,
            method: method.to_string(),
            problem: problem.name().to_string(),
            config,
            verdict: self.verdict,
            message: self.message.clone(),
            iterations: self.records.len(),
            initial_f: self.initial_f,
            final_f: self.final_f,
            final_grad_norm: self.final_grad_norm,
            constants: Some(TraceConstants {
                l2: pc.l2,
                sigma_v: scaling.sigma_v(),
                l_v: scaling.l_v(),
                eta: cfg.eta,
                xi: cfg.xi,
                epsilon: cfg.epsilon,
                convex,
                f_star,
                deviation_mode: match cfg.deviation_mode {
                    DeviationMode::Oracle => "oracle".into(),
                    DeviationMode::Bound(_) => "bound".into(),
                },
            }),
            r_min,
            eta_eff: r_min.map(|r| cfg.eta * r.powi(3)),
            count_f: count(StepClass::ValueDecrease),
            count_g: count(StepClass::GradDecrease),
            count_violation: count(StepClass::Violation),
            bound_retries: self.bound_retries,
            curvature: Some(CurvatureHistory {
                h_min_eigs: self.h_min_eigs.clone(),
                h_norms: self.h_norms.clone(),
                d_proxy: self.d_proxy(),
            }),
            kkt: self.kkt_summary(),
            component_lipschitz: pc.component_lipschitz,
            versions: versions(),
        };
        TraceFile { records: self.records.clone(), metadata }
    }
}

fn is_stationary(cfg: &HatConfig, f: f64, g_norm: f64) -> bool {
    g_norm == 0.0
        || match cfg.convexity {
            ConvexityMode::Nonconvex => g_norm <= cfg.epsilon,
            ConvexityMode::Convex { f_star } => f - f_star <= cfg.epsilon,
        }
}

/// Runs HAT from `x0`.
///
/// Configuration errors (invalid parameters, missing oracles, estimator
/// failures) are returned as `Err`; a subproblem failure ends the run with
/// [`Verdict::SolverFailure`] and the partial trace.
pub fn run(
    problem: &dyn Objective,
    scaling: &ScalingFunction,
    estimator: &mut dyn HessianEstimator,
    cfg: &HatConfig,
    x0: &DenseVector,
) -> Result<HatRun> {
    cfg.validate()?;
    if x0.len() != problem.dim() || scaling.dim() != problem.dim() {
        return Err(HatError::InvalidInput(format!(
            "dimensions differ: problem {}, start {}, scaling {}",
            problem.dim(),
            x0.len(),
            scaling.dim()
        )));
    }
    if 2.0 * scaling.sigma_v() <= scaling.l_v() {
        return Err(HatError::Constants { sigma_v: scaling.sigma_v(), l_v: scaling.l_v() });
    }
    if matches!(cfg.deviation_mode, DeviationMode::Oracle) && !problem.has_hessian() {
        return Err(HatError::Config(format!("oracle deviation mode needs the Hessian of `{}`", problem.name())));
    }
    if estimator.needs_hessian() && !problem.has_hessian() {
        return Err(HatError::Config(format!(
            "estimator `{}` needs the Hessian of `{}`",
            estimator.name(),
            problem.name()
        )));
    }
    let l2 = problem.constants().l2;
    let clock = Instant::now();

    let mut x = x0.clone();
    let mut f = problem.value(&x);
    let mut g = problem.gradient(&x);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(HatError::InvalidInput("objective is not finite at the start point".into()));
    }
    let mut g_norm = g.norm();
    let mut out = HatRun {
        final_x: x.clone(),
        records: Vec::new(),
        verdict: Verdict::MaxIters,
        message: None,
        iterates: vec![x.clone()],
        h_min_eigs: Vec::new(),
        h_norms: Vec::new(),
        kkt: Vec::new(),
        bound_retries: 0,
        initial_f: f,
        final_f: f,
        final_grad_norm: g_norm,
    };

    let mut k = 0;
    let verdict = loop {
        if is_stationary(cfg, f, g_norm) {
            break Verdict::Converged;
        }
        if k >= cfg.max_iters {
            break Verdict::MaxIters;
        }
        let h = estimator.produce(k, &x, &g, problem)?;
        let dev = deviation_for_schedule(&x, g_norm, &h, problem, cfg)?;

        let attempts = if matches!(cfg.deviation_mode, DeviationMode::Bound(_)) { 2 } else { 1 };
        let mut dev_used = dev;
        let mut step = None;
        for attempt in 0..attempts {
            let (r_k, a_k) = schedule(g_norm, dev_used, cfg, scaling, l2)?;
            let radius = r_k * g_norm.sqrt();
            let model = TrustRegionModel { g: g.clone(), h: h.clone(), a: a_k, scaling, center: x.clone(), radius };
            let sol = match solve(&model) {
                Ok(sol) => sol,
                Err(e) => {
                    out.message = Some(e.to_string());
                    step = None;
                    break;
                }
            };
            let x_next = &x + &sol.d;
            let f_next = problem.value(&x_next);
            let g_next = problem.gradient(&x_next);
            let g_next_norm = g_next.norm();
            if !f_next.is_finite() || !g_next_norm.is_finite() {
                out.message = Some(format!("objective is not finite after the step at iteration {k}"));
                step = None;
                break;
            }
            let class = classify_step(f, f_next, g_norm, g_next_norm, r_k, cfg.eta, cfg.xi);
            let kkt = if cfg.certify_kkt { Some(check_kkt(&model, &sol)?) } else { None };
            step = Some((r_k, a_k, radius, sol, x_next, f_next, g_next, g_next_norm, class, kkt));
            if class != StepClass::Violation || attempt + 1 == attempts {
                break;
            }
            out.bound_retries += 1;
            dev_used *= 2.0;
        }
        let Some((r_k, a_k, radius, sol, x_next, f_next, g_next, g_next_norm, class, kkt)) = step else {
            break Verdict::SolverFailure;
        };

        let spectrum = eigenvalues(&h)?;
        out.h_min_eigs.push(spectrum[0]);
        out.h_norms.push(spectrum[0].abs().max(spectrum[spectrum.len() - 1].abs()));
        if let Some(kkt) = kkt {
            out.kkt.push(kkt);
        }
        out.records.push(IterationRecord {
            k,
            f,
            grad_norm: g_norm,
            deviation: dev_used,
            delta: dev_used / g_norm.sqrt(),
            r_k,
            a_k,
            radius,
            lambda: sol.lambda,
            step_norm: sol.d.norm(),
            on_boundary: sol.on_boundary,
            step_class: class,
            kkt_residual: sol.kkt_residual,
            wall_nanos: clock.elapsed().as_nanos() as u64,
        });

        let descent_ok = f_next <= f + CLASSIFICATION_SLACK * (1.0 + f.abs());
        estimator.observe_step(&sol.d, &(&g_next - &g));
        x = x_next;
        f = f_next;
        g = g_next;
        g_norm = g_next_norm;
        out.iterates.push(x.clone());
        k += 1;

        if class == StepClass::Violation {
            out.message = Some(format!("iteration {}: neither decrease condition holds", k - 1));
            break Verdict::ViolationHalt;
        }
        if !descent_ok {
            out.message = Some(format!("iteration {}: objective increased", k - 1));
            break Verdict::ViolationHalt;
        }
    };

    out.verdict = verdict;
    out.final_x = x;
    out.final_f = f;
    out.final_grad_norm = g_norm;
    Ok(out)
}
