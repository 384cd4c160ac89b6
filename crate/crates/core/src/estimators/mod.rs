//! Hessian approximations `H_k` behind a uniform per-iteration interface.

use serde::{Deserialize, Serialize};

use crate::error::{HatError, Result};
use crate::numerics::{operator_norm, DenseVector, SymmetricMatrix};
use crate::objectives::Objective;

mod ggn;
mod hutchinson;
mod quasi_newton;
mod wrappers;

pub use ggn::{gauss_newton_matrix, GgnEstimator, GgnKind};
pub use hutchinson::{HutchinsonEstimator, ProbeMode};
pub use quasi_newton::{bfgs_update, dfp_update, sr1_update, QuasiNewtonEstimator, QuasiNewtonKind};
pub use wrappers::{CompressedEstimator, Compression, LazyEstimator};

/// Skip threshold shared by the quasi-Newton safeguards.
pub const QN_SKIP_TOLERANCE: f64 = 1e-8;

/// A stateful strategy producing a symmetric `H_k` each iteration.
pub trait HessianEstimator: Send {
    fn name(&self) -> String;

    fn produce(
        &mut self,
        k: usize,
        x: &DenseVector,
        g: &DenseVector,
        problem: &dyn Objective,
    ) -> Result<SymmetricMatrix>;

    /// Called after every accepted step with `s = x_{k+1} - x_k` and
    /// `y = g_{k+1} - g_k`.
    fn observe_step(&mut self, _s: &DenseVector, _y: &DenseVector) {}

    /// Whether `produce` needs the problem's Hessian oracle.
    fn needs_hessian(&self) -> bool {
        false
    }
}

impl<E: HessianEstimator + ?Sized> HessianEstimator for Box<E> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn produce(&mut self, k: usize, x: &DenseVector, g: &DenseVector, problem: &dyn Objective) -> Result<SymmetricMatrix> {
        (**self).produce(k, x, g, problem)
    }
    fn observe_step(&mut self, s: &DenseVector, y: &DenseVector) {
        (**self).observe_step(s, y)
    }
    fn needs_hessian(&self) -> bool {
        (**self).needs_hessian()
    }
}

/// `H_k = hess f(x_k)`.
#[derive(Debug, Clone, Default)]
pub struct ExactEstimator;

impl HessianEstimator for ExactEstimator {
    fn name(&self) -> String {
        "exact".into()
    }

    fn produce(&mut self, _k: usize, x: &DenseVector, _g: &DenseVector, problem: &dyn Objective) -> Result<SymmetricMatrix> {
        problem.hessian(x)
    }

    fn needs_hessian(&self) -> bool {
        true
    }
}

/// Declared bound `||hess f(x_k) - H_k|| <= m ||grad f(x_k)||^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InexactnessBound {
    pub m: f64,
    pub beta: f64,
}

impl InexactnessBound {
    pub fn new(m: f64, beta: f64) -> Result<Self> {
        if !(m >= 0.0 && m.is_finite() && beta >= 0.0 && beta.is_finite()) {
            return Err(HatError::Config(format!("inexactness bound needs finite m, beta >= 0, got ({m}, {beta})")));
        }
        Ok(InexactnessBound { m, beta })
    }

    pub fn evaluate(&self, grad_norm: f64) -> f64 {
        self.m * grad_norm.powf(self.beta)
    }
}

/// `||exact - h||`.
pub fn deviation(h: &SymmetricMatrix, exact: &SymmetricMatrix) -> Result<f64> {
    if h.dim() != exact.dim() {
        return Err(HatError::InvalidInput(format!(
            "cannot compare {0}x{0} with {1}x{1}",
            h.dim(),
            exact.dim()
        )));
    }
    operator_norm(&exact.add_scaled(h, -1.0)?)
}
