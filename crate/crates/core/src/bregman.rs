//! Scaling functions `rho` and their Bregman divergences
//! `V(x, y) = rho(y) - rho(x) - <grad rho(x), y - x>`.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{HatError, Result};
use crate::numerics::{eigendecompose, DenseVector, SymmetricMatrix};

/// Distance kept from the boundary of a restricted domain.
pub const INTERIOR_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    Everywhere,
    /// `{x : x_i > -theta}`
    ShiftedOrthant { theta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Quadratic,
    Entropic { theta: f64 },
}

/// A strongly convex, smooth generator with certified `(sigma_v, l_v)`,
/// `2 sigma_v > l_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFunction {
    kind: Kind,
    b: SymmetricMatrix,
    sigma_v: f64,
    l_v: f64,
}

fn spectrum_bounds(b: &SymmetricMatrix) -> Result<(f64, f64)> {
    let eig = eigendecompose(b)?;
    if eig.min() <= 0.0 {
        return Err(HatError::InvalidInput(format!(
            "scaling matrix must be positive definite, minimum eigenvalue {:e}",
            eig.min()
        )));
    }
    Ok((eig.min(), eig.max()))
}

fn certify(kind: Kind, b: SymmetricMatrix, sigma_v: f64, l_v: f64) -> Result<ScalingFunction> {
    if 2.0 * sigma_v <= l_v {
        return Err(HatError::Constants { sigma_v, l_v });
    }
    Ok(ScalingFunction { kind, b, sigma_v, l_v })
}

/// `rho(x) = 1/2 <Bx, x>` with `sigma_v = lambda_min(B)`, `l_v = lambda_max(B)`.
pub fn make_quadratic_scaling(b: SymmetricMatrix) -> Result<ScalingFunction> {
    let (lo, hi) = spectrum_bounds(&b)?;
    certify(Kind::Quadratic, b, lo, hi)
}

/// `rho(x) = 1/2 <Bx, x> + theta sum (x_i + theta) ln(x_i + theta)` with
/// `sigma_v = lambda_min + theta / (1 + n theta)` and `l_v = lambda_max + 1`.
///
/// The constants are those of the simplex; off the simplex they are taken as
/// declared.
pub fn make_entropic_simplex_scaling(b: SymmetricMatrix, theta: f64, n: usize) -> Result<ScalingFunction> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(HatError::InvalidInput(format!("theta must be positive, got {theta}")));
    }
    if b.dim() != n {
        return Err(HatError::InvalidInput(format!("scaling matrix is {0}x{0}, dimension is {n}", b.dim())));
    }
    let (lo, hi) = spectrum_bounds(&b)?;
    certify(Kind::Entropic { theta }, b, lo + theta / (1.0 + n as f64 * theta), hi + 1.0)
}

impl ScalingFunction {
    /// `rho(x) = 1/2 ||x||^2`.
    pub fn euclidean(n: usize) -> Self {
        make_quadratic_scaling(SymmetricMatrix::identity(n)).expect("identity is a valid scaling")
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    pub fn sigma_v(&self) -> f64 {
        self.sigma_v
    }

    pub fn l_v(&self) -> f64 {
        self.l_v
    }

    pub fn domain(&self) -> Domain {
        match self.kind {
            Kind::Quadratic => Domain::Everywhere,
            Kind::Entropic { theta } => Domain::ShiftedOrthant { theta },
        }
    }

    /// The matrix `B` when `rho` is purely quadratic.
    pub fn quadratic_matrix(&self) -> Option<&SymmetricMatrix> {
        match self.kind {
            Kind::Quadratic => Some(&self.b),
            Kind::Entropic { .. } => None,
        }
    }

    pub fn contains(&self, x: &DenseVector) -> bool {
        match self.kind {
            Kind::Quadratic => x.iter().all(|v| v.is_finite()),
            Kind::Entropic { theta } => x.iter().all(|&v| v + theta > 0.0),
        }
    }

    /// Inside the domain by at least [`INTERIOR_MARGIN`].
    pub fn contains_strictly(&self, x: &DenseVector) -> bool {
        match self.kind {
            Kind::Quadratic => self.contains(x),
            Kind::Entropic { theta } => x.iter().all(|&v| v + theta >= INTERIOR_MARGIN),
        }
    }

    fn check(&self, x: &DenseVector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(HatError::InvalidInput(format!(
                "point has dimension {}, scaling has {}",
                x.len(),
                self.dim()
            )));
        }
        if !self.contains(x) {
            return Err(HatError::Domain(format!("point outside {:?}", self.domain())));
        }
        Ok(())
    }

    pub fn rho(&self, x: &DenseVector) -> Result<f64> {
        self.check(x)?;
        let quad = 0.5 * self.b.quadratic_form(x);
        Ok(match self.kind {
            Kind::Quadratic => quad,
            Kind::Entropic { theta } => {
                quad + theta * x.iter().map(|&v| (v + theta) * (v + theta).ln()).sum::<f64>()
            }
        })
    }

    pub fn grad_rho(&self, x: &DenseVector) -> Result<DenseVector> {
        self.check(x)?;
        let mut g = self.b.mul_vec(x);
        if let Kind::Entropic { theta } = self.kind {
            for (gi, &v) in g.iter_mut().zip(x.iter()) {
                *gi += theta * ((v + theta).ln() + 1.0);
            }
        }
        Ok(g)
    }

    pub fn hess_rho(&self, x: &DenseVector) -> Result<SymmetricMatrix> {
        self.check(x)?;
        Ok(match self.kind {
            Kind::Quadratic => self.b.clone(),
            Kind::Entropic { theta } => {
                let diag = DVector::from_fn(x.len(), |i, _| theta / (x[i] + theta));
                SymmetricMatrix::symmetrized(self.b.as_matrix() + nalgebra::DMatrix::from_diagonal(&diag))
            }
        })
    }

    /// `V(x, y)`.
    pub fn divergence(&self, x: &DenseVector, y: &DenseVector) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        let d = y - x;
        let quad = 0.5 * self.b.quadratic_form(&d);
        Ok(match self.kind {
            Kind::Quadratic => quad,
            Kind::Entropic { theta } => {
                // Per coordinate: theta [ (y+t) ln((y+t)/(x+t)) - (y - x) ].
                let ent: f64 = x
                    .iter()
                    .zip(y.iter())
                    .map(|(&xi, &yi)| (yi + theta) * ((yi + theta) / (xi + theta)).ln() - (yi - xi))
                    .sum();
                quad + theta * ent
            }
        })
    }
}
