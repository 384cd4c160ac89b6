use rand::Rng;

use super::Objective;
use crate::error::Result;
use crate::numerics::{operator_norm, DenseVector};
use crate::rng;

/// Largest observed `||hess f(x) - hess f(y)|| / ||x - y||` over `pairs`
/// random pairs drawn uniformly from the box `center +- radius`.
pub fn sample_hessian_lipschitz(
    problem: &dyn Objective,
    center: &DenseVector,
    radius: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = rng::stream(seed, &[0x4c32]);
    let n = center.len();
    let mut best = 0.0f64;
    for _ in 0..pairs {
        let x = center + DenseVector::from_fn(n, |_, _| rng.random_range(-radius..=radius));
        let y = center + DenseVector::from_fn(n, |_, _| rng.random_range(-radius..=radius));
        let dist = (&x - &y).norm();
        if dist == 0.0 {
            continue;
        }
        let diff = problem.hessian(&x)?.add_scaled(&problem.hessian(&y)?, -1.0)?;
        best = best.max(operator_norm(&diff)? / dist);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzAudit {
    pub l2: f64,
    pub max_ratio: f64,
    pub samples: usize,
    pub violations: usize,
}

impl LipschitzAudit {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks the recorded Hessian-Lipschitz constant on fresh random pairs.
pub fn audit_hessian_lipschitz(
    problem: &dyn Objective,
    center: &DenseVector,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<LipschitzAudit> {
    let l2 = problem.constants().l2;
    let mut rng = rng::stream(seed, &[0xa0d1]);
    let n = center.len();
    let mut max_ratio = 0.0f64;
    let mut violations = 0;
    for _ in 0..samples {
        let x = center + DenseVector::from_fn(n, |_, _| rng.random_range(-radius..=radius));
        let y = center + DenseVector::from_fn(n, |_, _| rng.random_range(-radius..=radius));
        let dist = (&x - &y).norm();
        let diff = problem.hessian(&x)?.add_scaled(&problem.hessian(&y)?, -1.0)?;
        let lhs = operator_norm(&diff)?;
        if dist > 0.0 {
            max_ratio = max_ratio.max(lhs / dist);
        }
        if lhs > l2 * dist + 1e-9 * (1.0 + lhs) {
            violations += 1;
        }
    }
    Ok(LipschitzAudit { l2, max_ratio, samples, violations })
}
