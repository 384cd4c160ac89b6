use nalgebra::DMatrix;

use super::{
    check_dim, sigmoid, weighted_gram, LabeledDataset, LeastSquaresModel, Objective,
    ProblemConstants, SampleStructure,
};
use crate::error::{HatError, Result};
use crate::numerics::{DenseVector, SymmetricMatrix};

/// Sigmoid least squares `(1/N) sum (b_i - sigma(a_i^T x))^2` with `b_i` in {0, 1}.
///
/// Viewed as `1/2 sum r_i^2` with `r_i = s (sigma(a_i^T x) - b_i)`, `s = sqrt(2/N)`.
#[derive(Debug, Clone)]
pub struct NllsProblem {
    design: DMatrix<f64>,
    targets: DenseVector,
    scale: f64,
    component_l: f64,
    constants: ProblemConstants,
}

/// `sup_t |d^3/dt^3 (sigma(t) - b)^2|` over `b` in {0, 1}, from a fine grid
/// with a small safety factor.
fn third_derivative_sup() -> f64 {
    let mut best = 0.0f64;
    let mut t = -40.0;
    while t <= 40.0 {
        let s = sigmoid(t);
        let s1 = s * (1.0 - s);
        let s2 = s1 * (1.0 - 2.0 * s);
        let s3 = s1 * (1.0 - 6.0 * s + 6.0 * s * s);
        for b in [0.0, 1.0] {
            best = best.max((2.0 * (3.0 * s1 * s2 + (s - b) * s3)).abs());
        }
        t += 1e-3;
    }
    best * 1.01
}

pub fn make_nlls(data: &LabeledDataset) -> Result<NllsProblem> {
    let mut targets = DenseVector::zeros(data.num_samples());
    for (t, &b) in targets.iter_mut().zip(&data.labels) {
        *t = match b {
            1.0 => 1.0,
            0.0 | -1.0 => 0.0,
            b => return Err(HatError::Data(format!("least squares needs labels in {{-1, 0, 1}}, found {b}"))),
        };
    }
    let n = data.num_samples() as f64;
    let scale = (2.0 / n).sqrt();
    let max_row = data.max_row_norm();
    let l2 = third_derivative_sup()
        * data.features.row_iter().map(|r| r.norm().powi(3)).sum::<f64>()
        / n;
    let component_l = scale * max_row * max_row / 4.0;
    let mut constants = ProblemConstants::new(l2, false);
    constants.component_lipschitz = Some(component_l);
    Ok(NllsProblem {
        design: data.features.clone(),
        targets,
        scale,
        component_l,
        constants,
    })
}

impl NllsProblem {
    /// Replaces the targets (entries in [0, 1]), e.g. to build a
    /// zero-residual instance `b_i = sigma(a_i^T x*)`.
    pub fn with_targets(mut self, targets: DenseVector) -> Self {
        assert_eq!(targets.len(), self.targets.len());
        self.targets = targets;
        self
    }

    pub fn design_matrix(&self) -> &DMatrix<f64> {
        &self.design
    }

    fn predictions(&self, x: &DenseVector) -> DenseVector {
        check_dim("nlls", self.dim(), x);
        (&self.design * x).map(sigmoid)
    }
}

impl LeastSquaresModel for NllsProblem {
    fn residuals(&self, x: &DenseVector) -> DenseVector {
        (self.predictions(x) - &self.targets) * self.scale
    }

    fn jacobian(&self, x: &DenseVector) -> DMatrix<f64> {
        let p = self.predictions(x);
        let mut jac = self.design.clone();
        for (mut row, &s) in jac.row_iter_mut().zip(p.iter()) {
            row *= self.scale * s * (1.0 - s);
        }
        jac
    }

    fn component_lipschitz(&self) -> f64 {
        self.component_l
    }
}

impl Objective for NllsProblem {
    fn name(&self) -> &str {
        "nlls"
    }

    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        0.5 * self.residuals(x).norm_squared()
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        let p = self.predictions(x);
        let coef = DenseVector::from_fn(p.len(), |i, _| {
            self.scale * self.scale * (p[i] - self.targets[i]) * p[i] * (1.0 - p[i])
        });
        self.design.tr_mul(&coef)
    }

    fn hessian(&self, x: &DenseVector) -> Result<SymmetricMatrix> {
        let p = self.predictions(x);
        let w = DenseVector::from_fn(p.len(), |i, _| {
            let s = p[i];
            let s1 = s * (1.0 - s);
            let s2 = s1 * (1.0 - 2.0 * s);
            self.scale * self.scale * (s1 * s1 + (s - self.targets[i]) * s2)
        });
        Ok(weighted_gram(&self.design, &w))
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    fn constants_mut(&mut self) -> &mut ProblemConstants {
        &mut self.constants
    }

    fn structure(&self) -> SampleStructure<'_> {
        SampleStructure::LeastSquares(self)
    }
}
