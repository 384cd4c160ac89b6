use serde::{Deserialize, Serialize};

use super::HessianEstimator;
use crate::error::{HatError, Result};
use crate::numerics::{DenseVector, SymmetricMatrix};
use crate::objectives::{softmax_gauss_newton, weighted_gram, Objective, SampleStructure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GgnKind {
    /// Whatever structure the problem exposes.
    Auto,
    /// `sum_i grad phi_i grad phi_i^T` for least-squares losses.
    LeastSquares,
    /// `sum_i J_i^T (diag p_i - p_i p_i^T) J_i` for cross-entropy losses;
    /// binary logistic losses on linear predictors are accepted as well.
    /// Also accepted under the name `empirical-fisher`.
    #[serde(alias = "empirical-fisher")]
    Softmax,
}

/// Generalized Gauss-Newton matrix of `problem` at `x`.
pub fn gauss_newton_matrix(problem: &dyn Objective, x: &DenseVector, kind: GgnKind) -> Result<SymmetricMatrix> {
    match (problem.structure(), kind) {
        (SampleStructure::LeastSquares(m), GgnKind::Auto | GgnKind::LeastSquares) => {
            let j = m.jacobian(x);
            Ok(SymmetricMatrix::symmetrized(j.tr_mul(&j)))
        }
        (SampleStructure::Softmax(m), GgnKind::Auto | GgnKind::Softmax) => Ok(softmax_gauss_newton(m, x)),
        (SampleStructure::Glm(m), GgnKind::Auto | GgnKind::Softmax) => {
            Ok(weighted_gram(m.design(), &m.curvature_weights(x)))
        }
        (SampleStructure::None, _) => Err(HatError::Unsupported(format!(
            "problem `{}` exposes no per-sample structure for Gauss-Newton",
            problem.name()
        ))),
        (_, kind) => Err(HatError::Unsupported(format!(
            "problem `{}` has no {kind:?} Gauss-Newton structure",
            problem.name()
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct GgnEstimator {
    kind: GgnKind,
}

impl GgnEstimator {
    pub fn new(kind: GgnKind) -> Self {
        GgnEstimator { kind }
    }
}

impl HessianEstimator for GgnEstimator {
    fn name(&self) -> String {
        "ggn".into()
    }

    fn produce(&mut self, _k: usize, x: &DenseVector, _g: &DenseVector, problem: &dyn Objective) -> Result<SymmetricMatrix> {
        gauss_newton_matrix(problem, x, self.kind)
    }
}
