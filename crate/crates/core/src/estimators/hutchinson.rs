use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HessianEstimator;
use crate::error::{HatError, Result};
use crate::numerics::{DenseVector, SymmetricMatrix};
use crate::objectives::Objective;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ProbeMode {
    /// `m` Rademacher probes keyed by `(seed, k, probe index)`.
    Rademacher { probes: usize },
    /// The standard basis, which recovers the diagonal exactly.
    Basis,
}

/// Diagonal estimate `mean_j z_j * (H z_j)`.
#[derive(Debug, Clone)]
pub struct HutchinsonEstimator {
    mode: ProbeMode,
    seed: u64,
}

impl HutchinsonEstimator {
    pub fn new(mode: ProbeMode, seed: u64) -> Result<Self> {
        if let ProbeMode::Rademacher { probes: 0 } = mode {
            return Err(HatError::Config("Hutchinson estimator needs at least one probe".into()));
        }
        Ok(HutchinsonEstimator { mode, seed })
    }

    /// Diagonal estimate of a fixed matrix at iteration `k`.
    pub fn estimate(&self, k: usize, h: &SymmetricMatrix) -> DenseVector {
        let n = h.dim();
        let mut acc = DenseVector::zeros(n);
        match self.mode {
            ProbeMode::Basis => {
                for i in 0..n {
                    acc[i] = h[(i, i)];
                }
            }
            ProbeMode::Rademacher { probes } => {
                for j in 0..probes {
                    let mut r = rng::stream(self.seed, &[k as u64, j as u64]);
                    let z = DenseVector::from_fn(n, |_, _| if r.random::<bool>() { 1.0 } else { -1.0 });
                    acc += z.component_mul(&h.mul_vec(&z));
                }
                acc /= probes as f64;
            }
        }
        acc
    }
}

impl HessianEstimator for HutchinsonEstimator {
    fn name(&self) -> String {
        match self.mode {
            ProbeMode::Rademacher { probes } => format!("hutchinson-{probes}"),
            ProbeMode::Basis => "hutchinson-basis".into(),
        }
    }

    fn produce(&mut self, k: usize, x: &DenseVector, _g: &DenseVector, problem: &dyn Objective) -> Result<SymmetricMatrix> {
        let h = problem.hessian(x)?;
        SymmetricMatrix::from_diagonal(self.estimate(k, &h).as_slice())
    }

    fn needs_hessian(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn random_matrix(n: usize, seed: u64) -> SymmetricMatrix {
        let mut r = rng::stream(seed, &[]);
        SymmetricMatrix::new(DMatrix::from_fn(n, n, |_, _| r.random::<f64>() * 2.0 - 1.0)).unwrap()
    }

    #[test]
    fn basis_probes_are_exact() {
        let h = random_matrix(5, 1);
        let est = HutchinsonEstimator::new(ProbeMode::Basis, 0).unwrap();
        let d = est.estimate(0, &h);
        for i in 0..5 {
            assert_eq!(d[i], h[(i, i)]);
        }
    }

    #[test]
    fn diagonal_matrices_are_recovered_with_one_probe() {
        let h = SymmetricMatrix::from_diagonal(&[3.0, -1.0, 0.5]).unwrap();
        let est = HutchinsonEstimator::new(ProbeMode::Rademacher { probes: 1 }, 9).unwrap();
        assert_eq!(est.estimate(4, &h).as_slice(), &[3.0, -1.0, 0.5]);
    }

    #[test]
    fn unbiased_within_five_standard_errors() {
        // z_i (Hz)_i = H_ii + sum_{j != i} H_ij z_i z_j, whose variance is
        // sum_{j != i} H_ij^2 for Rademacher probes.
        let h = random_matrix(5, 2);
        let m = 10_000;
        let est = HutchinsonEstimator::new(ProbeMode::Rademacher { probes: m }, 3).unwrap();
        let d = est.estimate(0, &h);
        for i in 0..5 {
            let var: f64 = (0..5).filter(|&j| j != i).map(|j| h[(i, j)] * h[(i, j)]).sum();
            let stderr = (var / m as f64).sqrt();
            assert!((d[i] - h[(i, i)]).abs() <= 5.0 * stderr, "entry {i}");
        }
    }

    #[test]
    fn deterministic_per_seed_and_iteration() {
        let h = random_matrix(4, 5);
        let est = HutchinsonEstimator::new(ProbeMode::Rademacher { probes: 3 }, 11).unwrap();
        assert_eq!(est.estimate(2, &h), est.estimate(2, &h));
        assert!(HutchinsonEstimator::new(ProbeMode::Rademacher { probes: 0 }, 0).is_err());
    }
}
