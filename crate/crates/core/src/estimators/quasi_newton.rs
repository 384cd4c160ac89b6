use serde::{Deserialize, Serialize};

use super::{HessianEstimator, QN_SKIP_TOLERANCE};
use crate::error::Result;
use crate::numerics::{DenseVector, SymmetricMatrix};
use crate::objectives::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuasiNewtonKind {
    Bfgs,
    Dfp,
    Sr1,
}

/// Direct BFGS update `B - B s s^T B / <s, B s> + y y^T / <s, y>`; `None` when
/// `<s, y> <= 1e-8 ||s|| ||y||` or the curvature `<s, B s>` is not positive.
pub fn bfgs_update(b: &SymmetricMatrix, s: &DenseVector, y: &DenseVector) -> Option<SymmetricMatrix> {
    let sy = s.dot(y);
    if sy <= QN_SKIP_TOLERANCE * s.norm() * y.norm() {
        return None;
    }
    let bs = b.mul_vec(s);
    let sbs = s.dot(&bs);
    if sbs <= 0.0 {
        return None;
    }
    let m = b.as_matrix() - &bs * bs.transpose() / sbs + y * y.transpose() / sy;
    Some(SymmetricMatrix::symmetrized(m))
}

/// Direct DFP update `(I - rho y s^T) B (I - rho s y^T) + rho y y^T`,
/// `rho = 1 / <s, y>`, with the BFGS skip rule.
pub fn dfp_update(b: &SymmetricMatrix, s: &DenseVector, y: &DenseVector) -> Option<SymmetricMatrix> {
    let sy = s.dot(y);
    if sy <= QN_SKIP_TOLERANCE * s.norm() * y.norm() {
        return None;
    }
    let rho = 1.0 / sy;
    // Expanded: B - rho (y s^T B + B s y^T) + rho^2 <s, B s> y y^T + rho y y^T.
    let bs = b.mul_vec(s);
    let sbs = s.dot(&bs);
    let m = b.as_matrix() - (y * bs.transpose() + &bs * y.transpose()) * rho
        + y * y.transpose() * (rho * rho * sbs + rho);
    Some(SymmetricMatrix::symmetrized(m))
}

/// SR-1 update `B + v v^T / <v, s>`, `v = y - B s`; `None` when `v = 0` or
/// `|<v, s>| < 1e-8 ||v|| ||s||`.
pub fn sr1_update(b: &SymmetricMatrix, s: &DenseVector, y: &DenseVector) -> Option<SymmetricMatrix> {
    let v = y - b.mul_vec(s);
    let vs = v.dot(s);
    let vn = v.norm();
    if vn == 0.0 || vs.abs() < QN_SKIP_TOLERANCE * vn * s.norm() {
        return None;
    }
    Some(SymmetricMatrix::symmetrized(b.as_matrix() + &v * v.transpose() / vs))
}

/// Quasi-Newton estimator maintaining the direct matrix `B_k`.
#[derive(Debug, Clone)]
pub struct QuasiNewtonEstimator {
    kind: QuasiNewtonKind,
    matrix: Option<SymmetricMatrix>,
    updates: usize,
    skips: usize,
}

impl QuasiNewtonEstimator {
    /// Starts from `init`, or, when `None`, from `||g_0|| / max(1, ||x_0||) I`
    /// at the first call to `produce`.
    pub fn new(kind: QuasiNewtonKind, init: Option<SymmetricMatrix>) -> Self {
        QuasiNewtonEstimator { kind, matrix: init, updates: 0, skips: 0 }
    }

    pub fn matrix(&self) -> Option<&SymmetricMatrix> {
        self.matrix.as_ref()
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn skips(&self) -> usize {
        self.skips
    }
}

impl HessianEstimator for QuasiNewtonEstimator {
    fn name(&self) -> String {
        match self.kind {
            QuasiNewtonKind::Bfgs => "bfgs",
            QuasiNewtonKind::Dfp => "dfp",
            QuasiNewtonKind::Sr1 => "sr1",
        }
        .into()
    }

    fn produce(&mut self, _k: usize, x: &DenseVector, g: &DenseVector, _problem: &dyn Objective) -> Result<SymmetricMatrix> {
        let b = self.matrix.get_or_insert_with(|| {
            let scale = g.norm() / x.norm().max(1.0);
            let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
            SymmetricMatrix::identity(x.len()).scaled(scale)
        });
        Ok(b.clone())
    }

    fn observe_step(&mut self, s: &DenseVector, y: &DenseVector) {
        let Some(b) = &self.matrix else { return };
        let next = match self.kind {
            QuasiNewtonKind::Bfgs => bfgs_update(b, s, y),
            QuasiNewtonKind::Dfp => dfp_update(b, s, y),
            QuasiNewtonKind::Sr1 => sr1_update(b, s, y),
        };
        match next {
            Some(m) if m.iter().all(|v| v.is_finite()) => {
                self.matrix = Some(m);
                self.updates += 1;
            }
            _ => self.skips += 1,
        }
    }
}
