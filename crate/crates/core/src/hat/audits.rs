//! Post-hoc iteration-count and convex-condition audits over a trace.

use serde::{Deserialize, Serialize};

use crate::trace::{IterationRecord, StepClass};

/// Outcome of comparing an observed count with its theoretical bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Pass,
    /// Exceeds the bound by at most a factor of two; reported, not fatal.
    NearMiss,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub observed: f64,
    pub bound: f64,
    pub status: BoundStatus,
}

impl BoundCheck {
    pub fn new(observed: f64, bound: f64) -> Self {
        let status = if observed <= bound {
            BoundStatus::Pass
        } else if observed <= 2.0 * bound {
            BoundStatus::NearMiss
        } else {
            BoundStatus::Fail
        };
        BoundCheck { observed, bound, status }
    }

    /// Strict comparison, ignoring the near-miss allowance.
    pub fn holds(&self) -> bool {
        self.status == BoundStatus::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub r_min: f64,
    pub eta_eff: f64,
    pub g_max: f64,
    pub count_f: usize,
    pub count_g: usize,
    pub count_violation: usize,
    /// `|F| <= (f0 - f*) eps^{-3/2} / eta_eff`; `None` when skipped.
    pub f_bound: Option<BoundCheck>,
    /// `|G| <= (|F| + 1) ceil(log_xi(eps / G_max))`.
    pub g_bound: Option<BoundCheck>,
    /// `|F| <= sqrt(4 D^3 / (eps eta_eff^2))` with `D` the iterate-spread proxy.
    pub convex_f_bound: Option<BoundCheck>,
    pub skipped: Vec<String>,
}

impl CountReport {
    /// No bound fails outright (near misses are tolerated).
    pub fn passed(&self) -> bool {
        [self.f_bound, self.g_bound, self.convex_f_bound]
            .iter()
            .flatten()
            .all(|c| c.status != BoundStatus::Fail)
    }
}

/// Inputs to [`audit_iteration_counts`] beyond the trace rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountAuditInput {
    pub eta: f64,
    pub xi: f64,
    pub epsilon: f64,
    pub initial_f: f64,
    pub f_star: Option<f64>,
    /// `Some(D)` selects the convex bound, `None` the nonconvex ones.
    pub convex_d_proxy: Option<f64>,
}

pub fn audit_iteration_counts(records: &[IterationRecord], input: &CountAuditInput) -> CountReport {
    let r_min = records.iter().map(|r| r.r_k).fold(f64::INFINITY, f64::min);
    let g_max = records.iter().map(|r| r.grad_norm).fold(0.0, f64::max);
    let eta_eff = if records.is_empty() { input.eta } else { input.eta * r_min.powi(3) };
    let count = |c: StepClass| records.iter().filter(|r| r.step_class == c).count();
    let count_f = count(StepClass::ValueDecrease);
    let count_g = count(StepClass::GradDecrease);
    let count_violation = count(StepClass::Violation);
    let mut report = CountReport {
        r_min: if records.is_empty() { f64::NAN } else { r_min },
        eta_eff,
        g_max,
        count_f,
        count_g,
        count_violation,
        f_bound: None,
        g_bound: None,
        convex_f_bound: None,
        skipped: Vec::new(),
    };
    let eps = input.epsilon;

    match input.convex_d_proxy {
        Some(d) => {
            let bound = (4.0 * d.powi(3) / (eps * eta_eff * eta_eff)).sqrt();
            report.convex_f_bound = Some(BoundCheck::new(count_f as f64, bound));
        }
        None => {
            match input.f_star {
                Some(f_star) => {
                    let bound = (input.initial_f - f_star) * eps.powf(-1.5) / eta_eff;
                    report.f_bound = Some(BoundCheck::new(count_f as f64, bound));
                }
                None => report.skipped.push("|F| bound: f_star unknown".into()),
            }
            let logs = if g_max > eps { ((eps / g_max).ln() / input.xi.ln()).ceil() } else { 0.0 };
            let bound = (count_f as f64 + 1.0) * logs.max(0.0);
            report.g_bound = Some(BoundCheck::new(count_g as f64, bound));
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexConditionReport {
    /// Iterations where `H_k >= (L_V - sigma_V) A_k I` held and growth was checked.
    pub checked: Vec<usize>,
    /// Iterations excluded because the curvature condition failed.
    pub excluded: Vec<usize>,
    /// Checked iterations where `g_{k+1} > g_k / xi`.
    pub growth_failures: Vec<usize>,
}

impl ConvexConditionReport {
    pub fn passed(&self) -> bool {
        self.growth_failures.is_empty()
    }
}

/// Checks the curvature precondition and, where it holds, the gradient
/// growth `g_{k+1} <= g_k (1 + 1e-9) / xi`. `final_grad_norm` closes the last row.
pub fn audit_convex_conditions(
    records: &[IterationRecord],
    h_min_eigs: &[f64],
    h_norms: &[f64],
    sigma_v: f64,
    l_v: f64,
    xi: f64,
    final_grad_norm: f64,
) -> ConvexConditionReport {
    let mut report = ConvexConditionReport { checked: Vec::new(), excluded: Vec::new(), growth_failures: Vec::new() };
    for (i, rec) in records.iter().enumerate() {
        let (Some(&min_eig), Some(&norm)) = (h_min_eigs.get(i), h_norms.get(i)) else {
            report.excluded.push(rec.k);
            continue;
        };
        if min_eig < (l_v - sigma_v) * rec.a_k - 1e-9 * norm {
            report.excluded.push(rec.k);
            continue;
        }
        report.checked.push(rec.k);
        let g_next = records.get(i + 1).map_or(final_grad_norm, |r| r.grad_norm);
        if g_next > rec.grad_norm * (1.0 + 1e-9) / xi {
            report.growth_failures.push(rec.k);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, grad_norm: f64, r_k: f64, class: StepClass) -> IterationRecord {
        IterationRecord {
            k,
            f: 1.0,
            grad_norm,
            deviation: 0.0,
            delta: 0.0,
            r_k,
            a_k: 1.0,
            radius: 1.0,
            lambda: 0.0,
            step_norm: 0.0,
            on_boundary: false,
            step_class: class,
            kkt_residual: 0.0,
            wall_nanos: 0,
        }
    }

    #[test]
    fn no_value_steps_pass_trivially() {
        let rows = vec![row(0, 1.0, 0.5, StepClass::GradDecrease), row(1, 0.4, 0.5, StepClass::GradDecrease)];
        let input = CountAuditInput {
            eta: 0.1,
            xi: 0.5,
            epsilon: 0.1,
            initial_f: 1.0,
            f_star: Some(0.0),
            convex_d_proxy: None,
        };
        let r = audit_iteration_counts(&rows, &input);
        assert_eq!((r.count_f, r.count_g), (0, 2));
        assert!(r.f_bound.unwrap().holds());
        // ceil(log_0.5(0.1)) = 4, times (0 + 1).
        assert_eq!(r.g_bound.unwrap().bound, 4.0);
        assert!(r.passed());
        assert!((r.eta_eff - 0.1 * 0.125).abs() < 1e-15);
    }

    #[test]
    fn near_miss_is_not_failure() {
        assert_eq!(BoundCheck::new(3.0, 2.0).status, BoundStatus::NearMiss);
        assert_eq!(BoundCheck::new(5.0, 2.0).status, BoundStatus::Fail);
    }

    #[test]
    fn euclidean_convex_condition_is_psd_check() {
        let rows = vec![row(0, 1.0, 0.5, StepClass::ValueDecrease), row(1, 1.5, 0.5, StepClass::ValueDecrease)];
        let r = audit_convex_conditions(&rows, &[0.0, -1.0], &[1.0, 1.0], 1.0, 1.0, 0.6, 10.0);
        assert_eq!(r.checked, vec![0]);
        assert_eq!(r.excluded, vec![1]);
        assert!(r.passed());
        let r = audit_convex_conditions(&rows, &[0.0, 0.0], &[1.0, 1.0], 1.0, 1.0, 0.6, 10.0);
        assert_eq!(r.growth_failures, vec![1]);
    }
}
