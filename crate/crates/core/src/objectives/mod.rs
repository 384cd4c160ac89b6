//! Objective functions with analytic value/gradient/Hessian oracles.
//!
//! Every problem implements [`Objective`]. Problems with per-sample structure
//! (least squares, softmax, generalized linear models) additionally expose it
//! through [`Objective::structure`] so Gauss-Newton estimators can be built
//! without knowing the concrete type.

use nalgebra::{DMatrix, DVector};

use crate::error::{HatError, Result};
use crate::numerics::{DenseVector, SymmetricMatrix};

mod dataset;
mod fd;
mod libsvm;
mod lipschitz;
mod logistic;
mod nlls;
mod quadratic;
mod rosenbrock;
mod softmax;
pub mod synthetic;
mod tanh;

pub use dataset::LabeledDataset;
pub use fd::{fd_gradient, fd_hessian, fd_step};
pub use libsvm::{load_libsvm, parse_libsvm, LabelMap, LibsvmOptions, MAX_DENSE_FEATURES};
pub use lipschitz::{audit_hessian_lipschitz, sample_hessian_lipschitz, LipschitzAudit};
pub use logistic::{make_logistic, LogisticProblem};
pub use nlls::{make_nlls, NllsProblem};
pub use quadratic::QuadraticProblem;
pub use rosenbrock::{make_rosenbrock, RosenbrockProblem};
pub use softmax::{make_softmax_classifier, softmax_gauss_newton, SoftmaxClassifier};
pub use tanh::{TanhLeastSquares, TanhNet, TanhSoftmax};

/// Known constants of a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConstants {
    /// Lipschitz constant of the Hessian.
    pub l2: f64,
    /// Global minimum value, when known.
    pub f_star: Option<f64>,
    /// Gradient-Lipschitz constant of each per-sample model component.
    pub component_lipschitz: Option<f64>,
    /// Polyak-Lojasiewicz constant, when configured.
    pub mu_pl: Option<f64>,
    pub convex: bool,
}

impl ProblemConstants {
    pub fn new(l2: f64, convex: bool) -> Self {
        ProblemConstants {
            l2,
            f_star: None,
            component_lipschitz: None,
            mu_pl: None,
            convex,
        }
    }
}

/// Least-squares structure `f(x) = 1/2 * sum_i r_i(x)^2` with
/// `r_i(x) = phi_i(x) - b_i`.
pub trait LeastSquaresModel {
    fn residuals(&self, x: &DenseVector) -> DenseVector;
    /// Rows are the model gradients `grad phi_i(x)`.
    fn jacobian(&self, x: &DenseVector) -> DMatrix<f64>;
    /// Bound on `||hess phi_i||` used by the Gauss-Newton inexactness bound.
    fn component_lipschitz(&self) -> f64;
}

/// Softmax cross-entropy structure
/// `f(x) = weight * sum_i -log softmax(phi(x, a_i))_{b_i}`.
pub trait SoftmaxModel {
    fn num_samples(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn label(&self, i: usize) -> usize;
    fn weight(&self) -> f64;
    /// Logits `phi(x, a_i)` and their Jacobian (classes x parameters).
    fn logits_and_jacobian(&self, x: &DenseVector, i: usize) -> (DenseVector, DMatrix<f64>);
    fn component_lipschitz(&self) -> f64;
}

/// Linear-predictor structure `f(x) = sum_i w_i * loss_i(a_i^T x)` with a
/// convex outer loss; the Gauss-Newton matrix coincides with the Hessian.
pub trait GlmModel {
    fn design(&self) -> &DMatrix<f64>;
    /// Per-sample weights `w_i * loss_i''(a_i^T x)`.
    fn curvature_weights(&self, x: &DenseVector) -> DenseVector;
}

pub enum SampleStructure<'a> {
    None,
    LeastSquares(&'a dyn LeastSquaresModel),
    Softmax(&'a dyn SoftmaxModel),
    Glm(&'a dyn GlmModel),
}

pub trait Objective: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn value(&self, x: &DenseVector) -> f64;
    fn gradient(&self, x: &DenseVector) -> DenseVector;

    fn hessian(&self, _x: &DenseVector) -> Result<SymmetricMatrix> {
        Err(HatError::Unsupported(format!(
            "problem `{}` has no Hessian oracle",
            self.name()
        )))
    }

    fn has_hessian(&self) -> bool {
        true
    }

    fn constants(&self) -> &ProblemConstants;
    fn constants_mut(&mut self) -> &mut ProblemConstants;

    fn default_start(&self) -> DenseVector {
        DVector::zeros(self.dim())
    }

    fn structure(&self) -> SampleStructure<'_> {
        SampleStructure::None
    }
}

/// Hides the Hessian oracle of an inner problem.
pub struct WithoutHessian<P>(pub P);

impl<P: Objective> Objective for WithoutHessian<P> {
    fn name(&self) -> &str {
        self.0.name()
    }
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &DenseVector) -> f64 {
        self.0.value(x)
    }
    fn gradient(&self, x: &DenseVector) -> DenseVector {
        self.0.gradient(x)
    }
    fn has_hessian(&self) -> bool {
        false
    }
    fn constants(&self) -> &ProblemConstants {
        self.0.constants()
    }
    fn constants_mut(&mut self) -> &mut ProblemConstants {
        self.0.constants_mut()
    }
    fn default_start(&self) -> DenseVector {
        self.0.default_start()
    }
    fn structure(&self) -> SampleStructure<'_> {
        self.0.structure()
    }
}

/// `sum_i w_i a_i a_i^T` for the rows `a_i` of `design`.
pub fn weighted_gram(design: &DMatrix<f64>, weights: &DenseVector) -> SymmetricMatrix {
    let mut scaled = design.clone();
    for mut col in scaled.column_iter_mut() {
        col.component_mul_assign(weights);
    }
    SymmetricMatrix::symmetrized(design.tr_mul(&scaled))
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(-m))` without overflow.
pub(crate) fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

pub(crate) fn check_dim(problem: &str, expected: usize, x: &DenseVector) {
    assert_eq!(
        x.len(),
        expected,
        "{problem}: point has dimension {}, expected {expected}",
        x.len()
    );
}
