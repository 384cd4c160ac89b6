use super::{SubproblemSolution, TrustRegionModel};
use crate::error::{HatError, Result};
use crate::numerics::{eigendecompose, operator_norm, DenseVector};

/// Iteration cap per start of the projected-gradient solver.
pub const GENERAL_MAX_ITERS: usize = 5000;

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-16;

fn project(d: DenseVector, radius: f64) -> DenseVector {
    let n = d.norm();
    if n > radius {
        d * (radius / n)
    } else {
        d
    }
}

/// Pulls `d` toward the origin until `center + d` lies strictly inside the
/// scaling's domain.
fn pull_inside(model: &TrustRegionModel<'_>, mut d: DenseVector) -> Option<DenseVector> {
    for _ in 0..80 {
        if model.scaling.contains_strictly(&(&model.center + &d)) {
            return Some(d);
        }
        d *= 0.5;
    }
    None
}

struct Outcome {
    d: DenseVector,
    value: f64,
}

fn descend(model: &TrustRegionModel<'_>, start: DenseVector, tol: f64, initial_step: f64) -> Result<Outcome> {
    let r = model.radius;
    let stop = tol * (1.0 + model.g.norm());
    let mut d = start;
    let mut value = model.value(&d)?;
    let mut grad = model.gradient(&d)?;
    let mut step = initial_step;
    for _ in 0..GENERAL_MAX_ITERS {
        let pg = (&d - project(&d - &grad, r)).norm();
        if pg <= stop {
            break;
        }
        let mut t = step;
        let (next, next_value) = loop {
            if t < MIN_STEP {
                return Err(HatError::Solver {
                    message: format!("line search step fell below {MIN_STEP:e}"),
                    lo: 0.0,
                    hi: t,
                });
            }
            let cand = project(&d - &grad * t, r);
            if !model.scaling.contains_strictly(&(&model.center + &cand)) {
                t *= 0.5;
                continue;
            }
            let v = model.value(&cand)?;
            if v <= value + ARMIJO * grad.dot(&(&cand - &d)) {
                break (cand, v);
            }
            t *= 0.5;
        };
        let next_grad = model.gradient(&next)?;
        let s = &next - &d;
        let y = &next_grad - &grad;
        let sy = s.dot(&y);
        // Barzilai-Borwein step for the next trial, kept within sane bounds.
        step = if sy > 0.0 { (s.norm_squared() / sy).clamp(1e-12 * initial_step, 1e12 * initial_step) } else { 2.0 * t };
        if next_value >= value && s.norm() <= f64::EPSILON * (1.0 + d.norm()) {
            d = next;
            value = next_value;
            break;
        }
        d = next;
        value = next_value;
        grad = next_grad;
    }
    Ok(Outcome { d, value })
}

/// Projected gradient with Armijo backtracking on the model over the ball,
/// from several starts; the multiplier is recovered from the boundary
/// stationarity residual.
pub fn solve_general_bregman(model: &TrustRegionModel<'_>, tol: f64) -> Result<SubproblemSolution> {
    model.validate()?;
    if !model.scaling.contains_strictly(&model.center) {
        return Err(HatError::Domain("model center is not strictly inside the scaling domain".into()));
    }
    let gnorm = model.g.norm();
    let r = model.radius;
    if gnorm == 0.0 || r == 0.0 {
        return Ok(model.zero_solution());
    }

    let curvature = model.h.add_scaled(&model.scaling.hess_rho(&model.center)?, model.a)?;
    let lipschitz = operator_norm(&curvature)?.max(1e-12 * gnorm / r);
    let eig = eigendecompose(&curvature)?;
    let v_min = eig.vectors.column(0).into_owned();

    let mut starts = vec![DenseVector::zeros(model.dim()), &model.g * (-r / gnorm), &v_min * r, &v_min * (-r)];
    starts.retain(|d| d.iter().all(|v| v.is_finite()));
    let mut best: Option<Outcome> = None;
    let mut last_err = None;
    for start in starts {
        let Some(start) = pull_inside(model, start) else { continue };
        match descend(model, start, tol, 1.0 / lipschitz) {
            Ok(out) => {
                if best.as_ref().is_none_or(|b| out.value < b.value) {
                    best = Some(out);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let best = match (best, last_err) {
        (Some(b), _) => b,
        (None, Some(e)) => return Err(e),
        (None, None) => return Err(HatError::Domain("no start point inside the scaling domain".into())),
    };

    let d = best.d;
    let grad = model.gradient(&d)?;
    let on_boundary = model.is_on_boundary(&d);
    let lambda = if on_boundary && d.norm() > 0.0 { (-grad.dot(&d) / d.norm_squared()).max(0.0) } else { 0.0 };
    let residual = (&grad + &d * lambda).norm();
    Ok(SubproblemSolution {
        on_boundary,
        kkt_residual: residual / (1.0 + gnorm),
        model_value: best.value,
        d,
        lambda,
    })
}
