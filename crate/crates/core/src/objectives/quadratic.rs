use nalgebra::DMatrix;

use super::{LeastSquaresModel, Objective, ProblemConstants, SampleStructure};
use crate::error::{HatError, Result};
use crate::numerics::{eigendecompose, solve_symmetric, DenseVector, SymmetricMatrix};

#[derive(Debug, Clone)]
enum Form {
    /// `1/2 x^T Q x - c^T x`
    General { q: SymmetricMatrix, c: DenseVector },
    /// `1/2 ||A x - b||^2`
    LeastSquares { a: DMatrix<f64>, b: DenseVector, q: SymmetricMatrix },
}

/// Quadratic objective. Its Hessian is constant, so `L2 = 0`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    form: Form,
    start: DenseVector,
    constants: ProblemConstants,
}

impl QuadraticProblem {
    /// `1/2 x^T Q x - c^T x`. The minimum is recorded when `Q` is positive definite.
    pub fn new(q: SymmetricMatrix, c: DenseVector) -> Result<Self> {
        if c.len() != q.dim() {
            return Err(HatError::InvalidInput(format!(
                "linear term has length {}, matrix is {}x{}",
                c.len(),
                q.dim(),
                q.dim()
            )));
        }
        let eig = eigendecompose(&q)?;
        let convex = eig.min() >= -1e-12 * eig.spectral_radius();
        let mut constants = ProblemConstants::new(0.0, convex);
        if eig.min() > 1e-12 * eig.spectral_radius() {
            let xs = solve_symmetric(&eig, &c);
            constants.f_star = Some(-0.5 * c.dot(&xs));
        }
        let start = DenseVector::zeros(c.len());
        Ok(QuadraticProblem { form: Form::General { q, c }, start, constants })
    }

    /// `1/2 ||A x - b||^2` with its least-squares minimum recorded.
    pub fn least_squares(a: DMatrix<f64>, b: DenseVector) -> Result<Self> {
        if a.nrows() != b.len() || a.ncols() == 0 {
            return Err(HatError::InvalidInput(format!(
                "design is {}x{}, target has length {}",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        let q = SymmetricMatrix::new(a.tr_mul(&a))?;
        let eig = eigendecompose(&q)?;
        let mut constants = ProblemConstants::new(0.0, true);
        constants.component_lipschitz = Some(0.0);
        if eig.min() > 1e-12 * eig.spectral_radius() {
            let xs = solve_symmetric(&eig, &a.tr_mul(&b));
            constants.f_star = Some(0.5 * (&a * xs - &b).norm_squared());
        }
        let start = DenseVector::zeros(a.ncols());
        Ok(QuadraticProblem { form: Form::LeastSquares { a, b, q }, start, constants })
    }

    pub fn with_start(mut self, start: DenseVector) -> Self {
        assert_eq!(start.len(), self.dim());
        self.start = start;
        self
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        match &self.form {
            Form::General { q, .. } | Form::LeastSquares { q, .. } => q,
        }
    }
}

impl LeastSquaresModel for QuadraticProblem {
    fn residuals(&self, x: &DenseVector) -> DenseVector {
        match &self.form {
            Form::LeastSquares { a, b, .. } => a * x - b,
            Form::General { .. } => unreachable!("general quadratics expose no residuals"),
        }
    }

    fn jacobian(&self, _x: &DenseVector) -> DMatrix<f64> {
        match &self.form {
            Form::LeastSquares { a, .. } => a.clone(),
            Form::General { .. } => unreachable!("general quadratics expose no residuals"),
        }
    }

    fn component_lipschitz(&self) -> f64 {
        0.0
    }
}

impl Objective for QuadraticProblem {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.matrix().dim()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        match &self.form {
            Form::General { q, c } => 0.5 * q.quadratic_form(x) - c.dot(x),
            Form::LeastSquares { a, b, .. } => 0.5 * (a * x - b).norm_squared(),
        }
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        match &self.form {
            Form::General { q, c } => q.mul_vec(x) - c,
            Form::LeastSquares { a, b, .. } => a.tr_mul(&(a * x - b)),
        }
    }

    fn hessian(&self, _x: &DenseVector) -> Result<SymmetricMatrix> {
        Ok(self.matrix().clone())
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    fn constants_mut(&mut self) -> &mut ProblemConstants {
        &mut self.constants
    }

    fn default_start(&self) -> DenseVector {
        self.start.clone()
    }

    fn structure(&self) -> SampleStructure<'_> {
        match self.form {
            Form::LeastSquares { .. } => SampleStructure::LeastSquares(self),
            Form::General { .. } => SampleStructure::None,
        }
    }
}
