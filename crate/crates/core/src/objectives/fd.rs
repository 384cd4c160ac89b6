use nalgebra::DMatrix;

use super::Objective;
use crate::error::{HatError, Result};
use crate::numerics::{DenseVector, SymmetricMatrix};

/// Fixed central-difference step `1e-5 * (1 + ||x||)`.
pub fn fd_step(x: &DenseVector) -> f64 {
    1e-5 * (1.0 + x.norm())
}

fn non_finite(what: &str, i: usize) -> HatError {
    HatError::Numeric {
        iterations: i,
        message: format!("non-finite {what} at finite-difference probe {i}"),
    }
}

pub fn fd_gradient(problem: &dyn Objective, x: &DenseVector) -> Result<DenseVector> {
    let h = fd_step(x);
    let mut probe = x.clone();
    let mut grad = DenseVector::zeros(x.len());
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + h;
        let fp = problem.value(&probe);
        probe[i] = xi - h;
        let fm = problem.value(&probe);
        probe[i] = xi;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(non_finite("value", i));
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

/// Central differences of the gradient oracle, symmetrized.
pub fn fd_hessian(problem: &dyn Objective, x: &DenseVector) -> Result<SymmetricMatrix> {
    let n = x.len();
    let h = fd_step(x);
    let mut probe = x.clone();
    let mut hess = DMatrix::zeros(n, n);
    for j in 0..n {
        let xj = x[j];
        probe[j] = xj + h;
        let gp = problem.gradient(&probe);
        probe[j] = xj - h;
        let gm = problem.gradient(&probe);
        probe[j] = xj;
        if gp.iter().chain(gm.iter()).any(|v| !v.is_finite()) {
            return Err(non_finite("gradient", j));
        }
        hess.set_column(j, &((gp - gm) / (2.0 * h)));
    }
    SymmetricMatrix::new(hess)
}
