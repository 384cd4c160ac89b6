use nalgebra::DVector;

use super::{SubproblemSolution, TrustRegionModel};
use crate::error::{HatError, Result};
use crate::numerics::{eigendecompose, DenseVector, Eigen, SymmetricMatrix};

/// Cap on safeguarded Newton/bisection steps for the multiplier.
pub const SECULAR_MAX_STEPS: usize = 200;

/// Hard-case threshold on the gradient component in the lowest eigenspace.
const HARD_CASE_TOLERANCE: f64 = 1e-10;

struct Spectral<'e> {
    eig: &'e Eigen,
    /// Gradient in the eigenbasis.
    coeffs: DenseVector,
}

impl Spectral<'_> {
    /// `||d(lambda)||` with `d(lambda) = -(M + lambda I)^{-1} g`, skipping the
    /// indices in `skip`.
    fn step_norm(&self, lambda: f64, skip: &[usize]) -> f64 {
        let mut s = 0.0;
        for (i, (&c, &l)) in self.coeffs.iter().zip(self.eig.values.iter()).enumerate() {
            if skip.contains(&i) {
                continue;
            }
            let t = c / (l + lambda);
            s += t * t;
        }
        s.sqrt()
    }

    /// `(||d||, d/dlambda ||d||)`.
    fn step_norm_and_slope(&self, lambda: f64) -> (f64, f64) {
        let (mut s2, mut s3) = (0.0, 0.0);
        for (&c, &l) in self.coeffs.iter().zip(self.eig.values.iter()) {
            let den = l + lambda;
            s2 += c * c / (den * den);
            s3 += c * c / (den * den * den);
        }
        let norm = s2.sqrt();
        (norm, -s3 / norm)
    }

    fn step(&self, lambda: f64, skip: &[usize]) -> DenseVector {
        let scaled = DVector::from_fn(self.coeffs.len(), |i, _| {
            if skip.contains(&i) {
                0.0
            } else {
                -self.coeffs[i] / (self.eig.values[i] + lambda)
            }
        });
        &self.eig.vectors * scaled
    }
}

fn finish(model: &TrustRegionModel<'_>, m0: &SymmetricMatrix, d: DenseVector, lambda: f64) -> Result<SubproblemSolution> {
    let residual = (m0.mul_vec(&d) + &d * lambda + &model.g).norm();
    Ok(SubproblemSolution {
        on_boundary: model.is_on_boundary(&d),
        kkt_residual: residual / (1.0 + model.g.norm()),
        model_value: model.value(&d)?,
        d,
        lambda,
    })
}

/// Solves the model for a quadratic scaling `V(x, x + d) = 1/2 <B d, d>`:
/// finds `lambda >= 0` with `H + A B + lambda I` positive semidefinite,
/// `(H + A B + lambda I) d = -g`, `||d|| <= R` and `lambda (||d|| - R) = 0`.
pub fn solve_quadratic_bregman(model: &TrustRegionModel<'_>) -> Result<SubproblemSolution> {
    model.validate()?;
    let b = model.scaling.quadratic_matrix().ok_or_else(|| {
        HatError::InvalidInput("quadratic solver needs a quadratic scaling function".into())
    })?;
    let gnorm = model.g.norm();
    if gnorm == 0.0 || model.radius == 0.0 {
        return Ok(model.zero_solution());
    }
    let r = model.radius;
    let m0 = model.h.add_scaled(b, model.a)?;
    let eig = eigendecompose(&m0)?;
    let sp = Spectral { eig: &eig, coeffs: eig.vectors.tr_mul(&model.g) };
    let lambda1 = eig.min();
    let scale = eig.spectral_radius().max(gnorm / r);
    let eps = 1e-12 * scale;

    if lambda1 > eps && sp.step_norm(0.0, &[]) <= r {
        return finish(model, &m0, sp.step(0.0, &[]), 0.0);
    }

    let lambda_lo = (-lambda1).max(0.0);
    let low: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] + lambda_lo <= eps).collect();
    if !low.is_empty() {
        let low_norm = low.iter().map(|&i| sp.coeffs[i] * sp.coeffs[i]).sum::<f64>().sqrt();
        if low_norm <= HARD_CASE_TOLERANCE * gnorm {
            let rest = sp.step(lambda_lo, &low);
            let rest_norm = rest.norm();
            if rest_norm < r {
                if lambda_lo == 0.0 {
                    // Singular PSD model with g orthogonal to its kernel.
                    return finish(model, &m0, rest, 0.0);
                }
                let tau = (r * r - rest_norm * rest_norm).sqrt();
                let v_min = eig.vectors.column(low[0]).into_owned();
                return finish(model, &m0, rest + v_min * tau, lambda_lo);
            }
        }
    }

    let mut lo = lambda_lo;
    let mut hi = lambda_lo + gnorm / r;
    let mut expansions = 0;
    while sp.step_norm(hi, &[]) > r {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 || !hi.is_finite() {
            return Err(HatError::Solver { message: "could not bracket the multiplier".into(), lo, hi });
        }
    }

    let mut lambda = hi;
    for _ in 0..SECULAR_MAX_STEPS {
        let (norm, slope) = sp.step_norm_and_slope(lambda);
        let gap = norm - r;
        if gap.abs() <= 1e-14 * r {
            return finish(model, &m0, sp.step(lambda, &[]), lambda);
        }
        if gap > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.max(f64::MIN_POSITIVE) {
            return finish(model, &m0, sp.step(hi, &[]), hi);
        }
        // Newton on 1/R - 1/||d(lambda)||, which is nearly linear in lambda.
        let phi = 1.0 / r - 1.0 / norm;
        let dphi = slope / (norm * norm);
        let newton = lambda - phi / dphi;
        lambda = if newton > lo && newton < hi && newton.is_finite() { newton } else { 0.5 * (lo + hi) };
    }
    Err(HatError::Solver {
        message: format!("multiplier search did not converge in {SECULAR_MAX_STEPS} steps"),
        lo,
        hi,
    })
}
