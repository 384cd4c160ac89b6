use super::{SubproblemSolution, TrustRegionModel};
use crate::error::Result;
use crate::numerics::{min_eigenvalue, operator_norm};

/// Residuals of the four optimality conditions of a model solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// `max(0, ||d|| - R)`.
    pub primal_feas: f64,
    /// `|lambda (||d|| - R)|`.
    pub comp_slack: f64,
    /// `||(H + lambda I) d + A (grad rho(c + d) - grad rho(c)) + g||`.
    pub stationarity: f64,
    /// `lambda_min(H + A hess rho(c + d) + lambda I)`.
    pub second_order_psd_min_eig: f64,
    /// `||H||`, the scale for the second-order tolerance.
    pub h_norm: f64,
    /// `||g||`, the scale for the stationarity tolerance.
    pub g_norm: f64,
}

impl KktReport {
    pub fn relative_stationarity(&self) -> f64 {
        self.stationarity / (1.0 + self.g_norm)
    }

    /// All residuals within `tol` (stationarity relative to `1 + ||g||`) and
    /// the second-order eigenvalue at least `-1e-8 ||H||`.
    pub fn passes(&self, tol: f64) -> bool {
        self.primal_feas <= tol
            && self.comp_slack <= tol
            && self.relative_stationarity() <= tol
            && self.second_order_psd_min_eig >= -1e-8 * self.h_norm - 1e-15
    }
}

pub fn check_kkt(model: &TrustRegionModel<'_>, sol: &SubproblemSolution) -> Result<KktReport> {
    let d = &sol.d;
    let norm = d.norm();
    let y = &model.center + d;
    let stationarity = (model.gradient(d)? + d * sol.lambda).norm();
    let curvature = model
        .h
        .add_scaled(&model.scaling.hess_rho(&y)?, model.a)?
        .shifted(sol.lambda);
    Ok(KktReport {
        primal_feas: (norm - model.radius).max(0.0),
        comp_slack: (sol.lambda * (norm - model.radius)).abs(),
        stationarity,
        second_order_psd_min_eig: min_eigenvalue(&curvature)?,
        h_norm: operator_norm(&model.h)?,
        g_norm: model.g.norm(),
    })
}
