//! The trust-region Bregman model
//! `min <g, d> + 1/2 <H d, d> + A V(c, c + d)` subject to `||d|| <= R`,
//! its solvers and a KKT certificate.

use crate::bregman::ScalingFunction;
use crate::error::{HatError, Result};
use crate::numerics::{DenseVector, SymmetricMatrix};

mod general;
mod kkt;
mod quadratic;

pub use general::{solve_general_bregman, GENERAL_MAX_ITERS};
pub use kkt::{check_kkt, KktReport};
pub use quadratic::{solve_quadratic_bregman, SECULAR_MAX_STEPS};

/// Relative tolerance for classifying a step as on the boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-7;

/// Default tolerance handed to the general solver by [`solve`].
pub const GENERAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TrustRegionModel<'a> {
    pub g: DenseVector,
    pub h: SymmetricMatrix,
    pub a: f64,
    pub scaling: &'a ScalingFunction,
    pub center: DenseVector,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub d: DenseVector,
    pub lambda: f64,
    pub on_boundary: bool,
    pub kkt_residual: f64,
    pub model_value: f64,
}

impl TrustRegionModel<'_> {
    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.h.dim() != n || self.center.len() != n || self.scaling.dim() != n {
            return Err(HatError::InvalidInput(format!(
                "inconsistent model dimensions: g {n}, H {}, center {}, scaling {}",
                self.h.dim(),
                self.center.len(),
                self.scaling.dim()
            )));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(HatError::InvalidInput(format!("radius must be finite and >= 0, got {}", self.radius)));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(HatError::InvalidInput(format!("A must be finite and >= 0, got {}", self.a)));
        }
        if self.g.iter().any(|v| !v.is_finite()) {
            return Err(HatError::InvalidInput("gradient has non-finite entries".into()));
        }
        Ok(())
    }

    /// `psi(d) = <g, d> + 1/2 <H d, d> + A V(c, c + d)`.
    pub fn value(&self, d: &DenseVector) -> Result<f64> {
        let y = &self.center + d;
        let v = if self.a == 0.0 { 0.0 } else { self.a * self.scaling.divergence(&self.center, &y)? };
        Ok(self.g.dot(d) + 0.5 * self.h.quadratic_form(d) + v)
    }

    /// `grad psi(d) = g + H d + A (grad rho(c + d) - grad rho(c))`.
    pub fn gradient(&self, d: &DenseVector) -> Result<DenseVector> {
        let mut grad = &self.g + self.h.mul_vec(d);
        if self.a != 0.0 {
            let y = &self.center + d;
            grad += (self.scaling.grad_rho(&y)? - self.scaling.grad_rho(&self.center)?) * self.a;
        }
        Ok(grad)
    }

    pub(crate) fn is_on_boundary(&self, d: &DenseVector) -> bool {
        self.radius - d.norm() <= BOUNDARY_TOLERANCE * self.radius
    }

    pub(crate) fn zero_solution(&self) -> SubproblemSolution {
        SubproblemSolution {
            d: DenseVector::zeros(self.dim()),
            lambda: 0.0,
            on_boundary: self.radius == 0.0,
            kkt_residual: self.g.norm() / (1.0 + self.g.norm()),
            model_value: 0.0,
        }
    }
}

/// Exact eigen-based solver for quadratic scalings, projected gradient
/// otherwise.
pub fn solve(model: &TrustRegionModel<'_>) -> Result<SubproblemSolution> {
    if model.scaling.quadratic_matrix().is_some() {
        solve_quadratic_bregman(model)
    } else {
        solve_general_bregman(model, GENERAL_TOLERANCE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn scalar_model(scaling: &ScalingFunction, radius: f64) -> TrustRegionModel<'_> {
        TrustRegionModel {
            g: DVector::from_element(1, 1.0),
            h: SymmetricMatrix::from_diagonal(&[2.0]).unwrap(),
            a: 1.0,
            scaling,
            center: DVector::zeros(1),
            radius,
        }
    }

    #[test]
    fn interior_scalar_example() {
        let s = ScalingFunction::euclidean(1);
        let m = scalar_model(&s, 1.0);
        let sol = solve_quadratic_bregman(&m).unwrap();
        assert!((sol.d[0] + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(sol.lambda, 0.0);
        assert!(!sol.on_boundary);
        let kkt = check_kkt(&m, &sol).unwrap();
        assert!(kkt.passes(1e-8) && kkt.second_order_psd_min_eig >= 0.0);
    }

    #[test]
    fn boundary_scalar_example() {
        let s = ScalingFunction::euclidean(1);
        let m = scalar_model(&s, 0.1);
        let sol = solve_quadratic_bregman(&m).unwrap();
        assert!((sol.d[0] + 0.1).abs() < 1e-14);
        assert!((sol.lambda - 7.0).abs() < 1e-10);
        assert!(sol.on_boundary);
        let kkt = check_kkt(&m, &sol).unwrap();
        assert!(kkt.passes(1e-8) && kkt.second_order_psd_min_eig >= 0.0);
    }

    #[test]
    fn zero_gradient_gives_zero_step() {
        let s = ScalingFunction::euclidean(2);
        let m = TrustRegionModel {
            g: DVector::zeros(2),
            h: SymmetricMatrix::from_diagonal(&[-1.0, 2.0]).unwrap(),
            a: 0.5,
            scaling: &s,
            center: DVector::zeros(2),
            radius: 0.0,
        };
        let sol = solve_quadratic_bregman(&m).unwrap();
        assert_eq!(sol.d, DVector::zeros(2));
        assert_eq!(sol.lambda, 0.0);
        assert_eq!(check_kkt(&m, &sol).unwrap().stationarity, 0.0);
        assert_eq!(solve_general_bregman(&m, 1e-10).unwrap().d, DVector::zeros(2));
    }

    #[test]
    fn corrupted_solution_fails_stationarity() {
        let s = ScalingFunction::euclidean(2);
        let m = TrustRegionModel {
            g: DVector::from_vec(vec![1.0, -0.5]),
            h: SymmetricMatrix::from_diagonal(&[3.0, 1.0]).unwrap(),
            a: 1.0,
            scaling: &s,
            center: DVector::zeros(2),
            radius: 2.0,
        };
        let mut sol = solve_quadratic_bregman(&m).unwrap();
        assert!(check_kkt(&m, &sol).unwrap().stationarity < 1e-12);
        sol.d[0] += 0.1;
        assert!(check_kkt(&m, &sol).unwrap().stationarity > 1e-3);
    }

    #[test]
    fn hard_case_reaches_boundary() {
        // g has no component along the negative-curvature direction e_1.
        let s = ScalingFunction::euclidean(2);
        let m = TrustRegionModel {
            g: DVector::from_vec(vec![0.0, 1.0]),
            h: SymmetricMatrix::from_diagonal(&[-3.0, 1.0]).unwrap(),
            a: 1.0,
            scaling: &s,
            center: DVector::zeros(2),
            radius: 1.0,
        };
        let sol = solve_quadratic_bregman(&m).unwrap();
        // lambda = 2 makes M = diag(0, 4); d = (tau, -1/4) with ||d|| = 1.
        assert!((sol.lambda - 2.0).abs() < 1e-12);
        assert!((sol.d[1] + 0.25).abs() < 1e-12);
        assert!((sol.d.norm() - 1.0).abs() < 1e-12);
        let kkt = check_kkt(&m, &sol).unwrap();
        assert!(kkt.passes(1e-10), "{kkt:?}");
    }

    #[test]
    fn general_solver_shrinking_radius() {
        let s = ScalingFunction::euclidean(3);
        let m = TrustRegionModel {
            g: DVector::from_vec(vec![1.0, 2.0, -1.0]),
            h: SymmetricMatrix::from_diagonal(&[1.0, -2.0, 0.5]).unwrap(),
            a: 0.3,
            scaling: &s,
            center: DVector::zeros(3),
            radius: 1e-12,
        };
        let sol = solve_general_bregman(&m, 1e-10).unwrap();
        assert!(sol.d.norm() <= 1e-12 * (1.0 + 1e-12));
    }
}
