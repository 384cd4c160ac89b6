use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::hat::{
    audit_convex_conditions, audit_iteration_counts, classify_step, schedule_identity_residual, BoundStatus,
    CountAuditInput, CLASSIFICATION_SLACK,
};
use crate::trace::{StepClass, TraceFile, Verdict};

/// Relative tolerance for recomputed derived columns.
pub const RECOMPUTE_TOLERANCE: f64 = 1e-12;

/// Bound on the stored subproblem KKT residual.
pub const KKT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectionStatus {
    Pass,
    Fail,
    /// Not applicable to this trace.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheorySection {
    pub name: String,
    pub status: SectionStatus,
    pub summary: String,
    /// Iteration indices that failed the section.
    pub failures: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub method: String,
    pub problem: String,
    pub iterations: usize,
    pub verdict: Verdict,
    pub sections: Vec<TheorySection>,
    pub passed: bool,
}

impl TheoryReport {
    pub fn section(&self, name: &str) -> Option<&TheorySection> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "theory report: {} on {} ({} iterations, verdict {})",
            self.method,
            self.problem,
            self.iterations,
            self.verdict.as_str()
        );
        for s in &self.sections {
            let tag = match s.status {
                SectionStatus::Pass => "PASS",
                SectionStatus::Fail => "FAIL",
                SectionStatus::Skipped => "SKIP",
            };
            let _ = writeln!(out, "  [{tag}] {}: {}", s.name, s.summary);
            if !s.failures.is_empty() {
                let shown: Vec<String> = s.failures.iter().take(10).map(|k| k.to_string()).collect();
                let more = if s.failures.len() > 10 { ", ..." } else { "" };
                let _ = writeln!(out, "         failing k: {}{more}", shown.join(", "));
            }
        }
        let _ = writeln!(out, "overall: {}", if self.passed { "PASS" } else { "FAIL" });
        out
    }
}

fn section(name: &str, failures: Vec<usize>, summary: String) -> TheorySection {
    let status = if failures.is_empty() { SectionStatus::Pass } else { SectionStatus::Fail };
    TheorySection { name: name.into(), status, summary, failures }
}

fn skipped(name: &str, why: &str) -> TheorySection {
    TheorySection { name: name.into(), status: SectionStatus::Skipped, summary: why.into(), failures: Vec::new() }
}

fn rel_err(recomputed: f64, stored: f64) -> f64 {
    if recomputed == stored {
        return 0.0;
    }
    (recomputed - stored).abs() / recomputed.abs().max(stored.abs()).max(f64::MIN_POSITIVE)
}

/// Re-derives every audited quantity from the raw trace columns and the
/// metadata constants. Nothing stored in a derived column is trusted.
pub fn theory_report(trace: &TraceFile) -> TheoryReport {
    let rows = &trace.records;
    let meta = &trace.metadata;
    let mut sections = Vec::new();

    // f and grad_norm of the iterate after each row.
    let next = |i: usize| -> (f64, f64) {
        rows.get(i + 1).map_or((meta.final_f, meta.final_grad_norm), |r| (r.f, r.grad_norm))
    };

    let mut fails = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let (f_next, _) = next(i);
        if !(f_next <= r.f + CLASSIFICATION_SLACK * (1.0 + r.f.abs())) {
            fails.push(r.k);
        }
    }
    let summary = format!("f nonincreasing across {} steps, slack 1e-9 (1 + |f|)", rows.len());
    sections.push(section("monotonicity", fails, summary));

    let Some(c) = &meta.constants else {
        for name in ["recomputation", "disjunction", "schedule-identity", "kkt", "set-size", "convex-conditions"] {
            sections.push(skipped(name, "trace carries no HAT constants"));
        }
        return finish(trace, sections);
    };

    let mut fails = Vec::new();
    let mut worst = 0.0_f64;
    for r in rows {
        let e = rel_err(r.deviation / r.grad_norm.sqrt(), r.delta).max(rel_err(r.r_k * r.grad_norm.sqrt(), r.radius));
        worst = worst.max(e);
        if !(e <= RECOMPUTE_TOLERANCE) {
            fails.push(r.k);
        }
    }
    let summary = format!("delta and radius recomputed from raw columns, worst relative error {worst:.3e}");
    sections.push(section("recomputation", fails, summary));

    let mut fails = Vec::new();
    let (mut nf, mut ng) = (0, 0);
    for (i, r) in rows.iter().enumerate() {
        let (f_next, g_next) = next(i);
        let class = classify_step(r.f, f_next, r.grad_norm, g_next, r.r_k, c.eta, c.xi);
        match class {
            StepClass::ValueDecrease => nf += 1,
            StepClass::GradDecrease => ng += 1,
            _ => {}
        }
        if class == StepClass::Violation || class != r.step_class {
            fails.push(r.k);
        }
    }
    let counts_match = nf == meta.count_f && ng == meta.count_g;
    let mut summary = format!("{nf} value-decrease, {ng} grad-decrease, {} other", rows.len() - nf - ng);
    if !counts_match {
        summary.push_str(&format!("; metadata counts differ ({}, {})", meta.count_f, meta.count_g));
    }
    let mut s = section("disjunction", fails, summary);
    if !counts_match {
        s.status = SectionStatus::Fail;
    }
    sections.push(s);

    let mut fails = Vec::new();
    let mut worst = 0.0_f64;
    let gap = 2.0 * c.sigma_v - c.l_v;
    for r in rows {
        let identity =
            schedule_identity_residual(r.grad_norm, r.deviation, r.r_k, r.a_k, c.eta, c.l2, c.sigma_v, c.l_v);
        let inner = 2.0 * c.eta + c.l2 / 3.0;
        let dev_prime = r.deviation / r.grad_norm.sqrt() * (1.0 + c.l_v / gap);
        let a = c.l2 / 2.0 + c.l_v * inner / gap;
        let r_formula = rel_err(c.xi / (dev_prime + (a * c.xi).sqrt()), r.r_k);
        let e = identity.max(r_formula);
        worst = worst.max(e);
        if !(e <= RECOMPUTE_TOLERANCE) {
            fails.push(r.k);
        }
    }
    let summary = format!("A_k identity and r_k formula, worst relative residual {worst:.3e}");
    sections.push(section("schedule-identity", fails, summary));

    let mut residuals: Vec<f64> = rows.iter().map(|r| r.kkt_residual).collect();
    residuals.sort_by(f64::total_cmp);
    let fails: Vec<usize> = rows.iter().filter(|r| !(r.kkt_residual <= KKT_TOLERANCE)).map(|r| r.k).collect();
    let summary = if residuals.is_empty() {
        "no subproblems".to_string()
    } else {
        let n = residuals.len();
        format!(
            "residual min {:.2e}, median {:.2e}, p90 {:.2e}, max {:.2e} (bound {KKT_TOLERANCE:.0e})",
            residuals[0],
            residuals[n / 2],
            residuals[(n * 9) / 10],
            residuals[n - 1]
        )
    };
    sections.push(section("kkt", fails, summary));

    if meta.verdict != Verdict::Converged {
        sections.push(skipped("set-size", "run did not converge"));
    } else {
        let d_proxy = meta.curvature.as_ref().map(|h| h.d_proxy);
        let input = CountAuditInput {
            eta: c.eta,
            xi: c.xi,
            epsilon: c.epsilon,
            initial_f: meta.initial_f,
            f_star: c.f_star,
            convex_d_proxy: if c.convex { d_proxy } else { None },
        };
        if c.convex && d_proxy.is_none() {
            sections.push(skipped("set-size", "convex trace without curvature history"));
        } else {
            let report = audit_iteration_counts(rows, &input);
            let mut parts = vec![format!("|F| = {}, |G| = {}, eta_eff = {:.3e}", report.count_f, report.count_g, report.eta_eff)];
            let mut failed = false;
            for (label, check) in [
                ("|F| bound", report.f_bound),
                ("|G| bound", report.g_bound),
                ("convex |F| bound (D proxied by iterate spread)", report.convex_f_bound),
            ] {
                if let Some(b) = check {
                    let tag = match b.status {
                        BoundStatus::Pass => "ok",
                        BoundStatus::NearMiss => "near miss",
                        BoundStatus::Fail => "FAILS",
                    };
                    parts.push(format!("{label} {:.0} <= {:.3e} {tag}", b.observed, b.bound));
                    failed |= b.status == BoundStatus::Fail;
                }
            }
            parts.extend(report.skipped.iter().cloned());
            let status = if failed { SectionStatus::Fail } else { SectionStatus::Pass };
            sections.push(TheorySection {
                name: "set-size".into(),
                status,
                summary: parts.join("; "),
                failures: Vec::new(),
            });
        }
    }

    match (&meta.curvature, c.convex) {
        (Some(h), true) => {
            let report =
                audit_convex_conditions(rows, &h.h_min_eigs, &h.h_norms, c.sigma_v, c.l_v, c.xi, meta.final_grad_norm);
            let summary = format!(
                "growth checked on {} iterations, {} excluded by the curvature condition",
                report.checked.len(),
                report.excluded.len()
            );
            sections.push(section("convex-conditions", report.growth_failures, summary));
        }
        (None, true) => sections.push(skipped("convex-conditions", "no curvature history")),
        (_, false) => sections.push(skipped("convex-conditions", "nonconvex mode")),
    }

    finish(trace, sections)
}

fn finish(trace: &TraceFile, sections: Vec<TheorySection>) -> TheoryReport {
    let passed = sections.iter().all(|s| s.status != SectionStatus::Fail);
    TheoryReport {
        method: trace.metadata.method.clone(),
        problem: trace.metadata.problem.clone(),
        iterations: trace.records.len(),
        verdict: trace.metadata.verdict,
        sections,
        passed,
    }
}
