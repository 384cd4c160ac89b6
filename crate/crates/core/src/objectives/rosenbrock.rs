use nalgebra::{DMatrix, DVector};

use super::{
    sample_hessian_lipschitz, LeastSquaresModel, Objective, ProblemConstants, SampleStructure,
};
use crate::error::Result;
use crate::numerics::{DenseVector, SymmetricMatrix};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `(1 - x1)^2 + 100 (x2 - x1^2)^2`.
#[derive(Debug, Clone)]
pub struct RosenbrockProblem {
    constants: ProblemConstants,
}

/// Rosenbrock with `L2` sampled on 1000 pairs in the box of radius 2 around
/// the origin (1.5x the largest ratio seen).
pub fn make_rosenbrock() -> RosenbrockProblem {
    let mut p = RosenbrockProblem {
        constants: ProblemConstants::new(f64::INFINITY, false),
    };
    let sampled = sample_hessian_lipschitz(&p, &DVector::zeros(2), 2.0, 1000, 0x5eed)
        .expect("rosenbrock Hessian is finite");
    p.constants.l2 = 1.5 * sampled;
    p.constants.f_star = Some(0.0);
    p.constants.component_lipschitz = Some(20.0 * SQRT2);
    p
}

impl LeastSquaresModel for RosenbrockProblem {
    fn residuals(&self, x: &DenseVector) -> DenseVector {
        DVector::from_vec(vec![SQRT2 * (1.0 - x[0]), 10.0 * SQRT2 * (x[1] - x[0] * x[0])])
    }

    fn jacobian(&self, x: &DenseVector) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[-SQRT2, 0.0, -20.0 * SQRT2 * x[0], 10.0 * SQRT2])
    }

    fn component_lipschitz(&self) -> f64 {
        20.0 * SQRT2
    }
}

impl Objective for RosenbrockProblem {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let (a, b) = (1.0 - x[0], x[1] - x[0] * x[0]);
        a * a + 100.0 * b * b
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        let b = x[1] - x[0] * x[0];
        DVector::from_vec(vec![-2.0 * (1.0 - x[0]) - 400.0 * x[0] * b, 200.0 * b])
    }

    fn hessian(&self, x: &DenseVector) -> Result<SymmetricMatrix> {
        let h11 = 2.0 - 400.0 * x[1] + 1200.0 * x[0] * x[0];
        let h12 = -400.0 * x[0];
        SymmetricMatrix::new(DMatrix::from_row_slice(2, 2, &[h11, h12, h12, 200.0]))
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    fn constants_mut(&mut self) -> &mut ProblemConstants {
        &mut self.constants
    }

    fn default_start(&self) -> DenseVector {
        DVector::from_vec(vec![-1.2, 1.0])
    }

    fn structure(&self) -> SampleStructure<'_> {
        SampleStructure::LeastSquares(self)
    }
}
