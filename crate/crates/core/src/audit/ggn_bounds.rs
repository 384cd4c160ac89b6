use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HatError, Result};
use crate::estimators::{deviation, gauss_newton_matrix, GgnKind};
use crate::numerics::DenseVector;
use crate::objectives::{Objective, SampleStructure};
use crate::rng::stream;

/// Absolute slack on every bound comparison.
pub const GGN_BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GgnLoss {
    /// `f = 1/2 sum_i (phi_i - b_i)^2`, bound `L sqrt(2 N f)`.
    LeastSquares,
    /// Cross-entropy over softmax logits, bound `2 L f`.
    Softmax,
}

/// A minimizer used by the star-convex and PL variants.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: DenseVector,
    pub f: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GgnBoundPoint {
    /// `||hess f(x) - H(x)||`.
    pub lhs: f64,
    pub base_rhs: f64,
    pub star_rhs: Option<f64>,
    pub pl_rhs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GgnBoundReport {
    pub loss: GgnLoss,
    pub component_lipschitz: f64,
    pub points: Vec<GgnBoundPoint>,
    pub max_lhs: f64,
    /// Indices of points where the base bound fails.
    pub base_failures: Vec<usize>,
    pub star_failures: Vec<usize>,
    pub pl_failures: Vec<usize>,
    pub skipped: Vec<String>,
}

impl GgnBoundReport {
    /// The base bound holds everywhere. The variants rest on extra
    /// assumptions about `f` and are reported by [`Self::variants_hold`].
    pub fn passed(&self) -> bool {
        self.base_failures.is_empty()
    }

    pub fn variants_hold(&self) -> bool {
        self.star_failures.is_empty() && self.pl_failures.is_empty()
    }
}

/// Evaluates both sides of the Gauss-Newton deviation bounds at `points`
/// random points drawn uniformly from the box of half-width `radius` around
/// `center`. The star-convex and PL variants need `optimum`; the PL variant
/// also needs `mu_pl` on the problem constants.
pub fn verify_ggn_bounds(
    problem: &dyn Objective,
    center: &DenseVector,
    radius: f64,
    points: usize,
    seed: u64,
    optimum: Option<&Optimum>,
) -> Result<GgnBoundReport> {
    let (loss, l, samples) = match problem.structure() {
        SampleStructure::LeastSquares(m) => (GgnLoss::LeastSquares, m.component_lipschitz(), None),
        SampleStructure::Softmax(m) => (GgnLoss::Softmax, m.component_lipschitz(), Some(m.num_samples())),
        _ => {
            return Err(HatError::Unsupported(format!(
                "problem `{}` is neither a least-squares nor a softmax loss",
                problem.name()
            )))
        }
    };
    if !(l.is_finite() && l >= 0.0) {
        return Err(HatError::Config(format!("problem `{}` has no component Lipschitz constant", problem.name())));
    }
    if !problem.has_hessian() {
        return Err(HatError::Config(format!("problem `{}` has no Hessian oracle", problem.name())));
    }
    let mu = problem.constants().mu_pl;
    let mut report = GgnBoundReport {
        loss,
        component_lipschitz: l,
        points: Vec::with_capacity(points),
        max_lhs: 0.0,
        base_failures: Vec::new(),
        star_failures: Vec::new(),
        pl_failures: Vec::new(),
        skipped: Vec::new(),
    };
    if optimum.is_none() {
        report.skipped.push("star-convex and PL variants: no minimizer supplied".into());
    } else if mu.is_none() {
        report.skipped.push("PL variant: mu_pl not configured".into());
    }

    for i in 0..points {
        let mut rng = stream(seed, &[i as u64]);
        let x = DenseVector::from_fn(center.len(), |j, _| center[j] + radius * rng.random_range(-1.0..=1.0));
        let f = problem.value(&x);
        let g_norm = problem.gradient(&x).norm();
        let kind = match loss {
            GgnLoss::LeastSquares => GgnKind::LeastSquares,
            GgnLoss::Softmax => GgnKind::Softmax,
        };
        let lhs = deviation(&gauss_newton_matrix(problem, &x, kind)?, &problem.hessian(&x)?)?;
        let n_res = match (loss, samples) {
            (GgnLoss::LeastSquares, _) => match problem.structure() {
                SampleStructure::LeastSquares(m) => m.residuals(&x).len() as f64,
                _ => unreachable!("structure checked above"),
            },
            (GgnLoss::Softmax, Some(n)) => n as f64,
            (GgnLoss::Softmax, None) => unreachable!("softmax carries a sample count"),
        };
        let (base_rhs, star_rhs, pl_rhs) = match loss {
            GgnLoss::LeastSquares => {
                let base = l * (2.0 * n_res * f).sqrt();
                let star = optimum.map(|o| {
                    l * (2.0 * n_res * g_norm * (&x - &o.x).norm()).sqrt() + l * (2.0 * n_res * o.f.max(0.0)).sqrt()
                });
                let pl = optimum
                    .zip(mu)
                    .map(|(o, mu)| l * g_norm * (n_res / mu).sqrt() + l * (2.0 * n_res * o.f.max(0.0)).sqrt());
                (base, star, pl)
            }
            GgnLoss::Softmax => {
                let base = 2.0 * l * f;
                let star = optimum.map(|o| 2.0 * l * g_norm * (&x - &o.x).norm() + 2.0 * l * o.f);
                let pl = optimum.zip(mu).map(|(o, mu)| l / mu * g_norm * g_norm + 2.0 * l * o.f);
                (base, star, pl)
            }
        };
        if lhs > base_rhs + GGN_BOUND_SLACK {
            report.base_failures.push(i);
        }
        if star_rhs.is_some_and(|r| lhs > r + GGN_BOUND_SLACK) {
            report.star_failures.push(i);
        }
        if pl_rhs.is_some_and(|r| lhs > r + GGN_BOUND_SLACK) {
            report.pl_failures.push(i);
        }
        report.max_lhs = report.max_lhs.max(lhs);
        report.points.push(GgnBoundPoint { lhs, base_rhs, star_rhs, pl_rhs });
    }
    Ok(report)
}
