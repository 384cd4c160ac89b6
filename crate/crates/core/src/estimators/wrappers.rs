use rand::Rng;
use serde::{Deserialize, Serialize};

use super::HessianEstimator;
use crate::error::{HatError, Result};
use crate::numerics::{DenseVector, SymmetricMatrix};
use crate::objectives::Objective;
use crate::rng;

/// Recomputes the inner estimate only when `k mod period = 0`.
pub struct LazyEstimator<E> {
    inner: E,
    period: usize,
    cached: Option<SymmetricMatrix>,
    inner_calls: Vec<usize>,
}

impl<E: HessianEstimator> LazyEstimator<E> {
    pub fn new(inner: E, period: usize) -> Result<Self> {
        if period == 0 {
            return Err(HatError::Config("lazy period must be at least 1".into()));
        }
        Ok(LazyEstimator { inner, period, cached: None, inner_calls: Vec::new() })
    }

    /// Iterations at which the inner estimator was invoked.
    pub fn inner_calls(&self) -> &[usize] {
        &self.inner_calls
    }
}

impl<E: HessianEstimator> HessianEstimator for LazyEstimator<E> {
    fn name(&self) -> String {
        format!("lazy{}({})", self.period, self.inner.name())
    }

    fn produce(&mut self, k: usize, x: &DenseVector, g: &DenseVector, problem: &dyn Objective) -> Result<SymmetricMatrix> {
        match &self.cached {
            Some(h) if !k.is_multiple_of(self.period) => Ok(h.clone()),
            _ => {
                let h = self.inner.produce(k, x, g, problem)?;
                self.inner_calls.push(k);
                self.cached = Some(h.clone());
                Ok(h)
            }
        }
    }

    fn observe_step(&mut self, s: &DenseVector, y: &DenseVector) {
        self.inner.observe_step(s, y)
    }

    fn needs_hessian(&self) -> bool {
        self.inner.needs_hessian()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum Compression {
    /// Keep the `ceil(fraction * n(n+1)/2)` largest-magnitude upper-triangle
    /// entries (ties broken by position), mirrored.
    TopK { fraction: f64 },
    /// Keep each upper-triangle entry with probability `fraction`, rescaled by
    /// `1 / fraction`; the mask is keyed by `(seed, k)`.
    RandomSparsify { fraction: f64, seed: u64 },
}

impl Compression {
    fn fraction(&self) -> f64 {
        match *self {
            Compression::TopK { fraction } | Compression::RandomSparsify { fraction, .. } => fraction,
        }
    }

    /// Compresses `h` as at iteration `k`.
    pub fn apply(&self, k: usize, h: &SymmetricMatrix) -> SymmetricMatrix {
        let n = h.dim();
        let upper: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let mut out = nalgebra::DMatrix::zeros(n, n);
        let mut put = |i: usize, j: usize, v: f64| {
            out[(i, j)] = v;
            out[(j, i)] = v;
        };
        match *self {
            Compression::TopK { fraction } => {
                let keep = ((fraction * upper.len() as f64).ceil() as usize).min(upper.len());
                let mut order: Vec<usize> = (0..upper.len()).collect();
                order.sort_by(|&a, &b| {
                    let (ia, ja) = upper[a];
                    let (ib, jb) = upper[b];
                    h[(ib, jb)].abs().total_cmp(&h[(ia, ja)].abs())
                });
                for &idx in &order[..keep] {
                    let (i, j) = upper[idx];
                    put(i, j, h[(i, j)]);
                }
            }
            Compression::RandomSparsify { fraction, seed } => {
                let mut r = rng::stream(seed, &[0x5a, k as u64]);
                for &(i, j) in &upper {
                    if r.random::<f64>() < fraction {
                        put(i, j, h[(i, j)] / fraction);
                    }
                }
            }
        }
        SymmetricMatrix::symmetrized(out)
    }
}

pub struct CompressedEstimator<E> {
    inner: E,
    scheme: Compression,
}

impl<E: HessianEstimator> CompressedEstimator<E> {
    pub fn new(inner: E, scheme: Compression) -> Result<Self> {
        let f = scheme.fraction();
        if !(f > 0.0 && f <= 1.0) {
            return Err(HatError::Config(format!("compression fraction must lie in (0, 1], got {f}")));
        }
        Ok(CompressedEstimator { inner, scheme })
    }
}

impl<E: HessianEstimator> HessianEstimator for CompressedEstimator<E> {
    fn name(&self) -> String {
        format!("compressed({})", self.inner.name())
    }

    fn produce(&mut self, k: usize, x: &DenseVector, g: &DenseVector, problem: &dyn Objective) -> Result<SymmetricMatrix> {
        let h = self.inner.produce(k, x, g, problem)?;
        Ok(self.scheme.apply(k, &h))
    }

    fn observe_step(&mut self, s: &DenseVector, y: &DenseVector) {
        self.inner.observe_step(s, y)
    }

    fn needs_hessian(&self) -> bool {
        self.inner.needs_hessian()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::ExactEstimator;
    use crate::objectives::{make_rosenbrock, QuadraticProblem};
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn lazy_calls_inner_on_period_multiples() {
        let p = make_rosenbrock();
        let mut lazy = LazyEstimator::new(ExactEstimator, 3).unwrap();
        let mut exact = ExactEstimator;
        let mut x = p.default_start();
        for k in 0..6 {
            let g = p.gradient(&x);
            let h = lazy.produce(k, &x, &g, &p).unwrap();
            if k % 3 == 0 {
                assert_eq!(h, exact.produce(k, &x, &g, &p).unwrap());
            }
            x[0] += 0.1;
        }
        assert_eq!(lazy.inner_calls(), &[0, 3]);

        let mut every = LazyEstimator::new(ExactEstimator, 1).unwrap();
        for k in 0..4 {
            let x = DVector::from_vec(vec![k as f64, 1.0]);
            let g = p.gradient(&x);
            assert_eq!(every.produce(k, &x, &g, &p).unwrap(), p.hessian(&x).unwrap());
        }
        assert!(LazyEstimator::new(ExactEstimator, 0).is_err());
    }

    #[test]
    fn lazy_exact_on_quadratic_is_exact() {
        let q = SymmetricMatrix::from_diagonal(&[1.0, 4.0]).unwrap();
        let p = QuadraticProblem::new(q.clone(), DVector::zeros(2)).unwrap();
        let mut lazy = LazyEstimator::new(ExactEstimator, 4).unwrap();
        for k in 0..9 {
            let x = DVector::from_vec(vec![k as f64, -(k as f64)]);
            assert_eq!(lazy.produce(k, &x, &p.gradient(&x), &p).unwrap(), q);
        }
    }

    #[test]
    fn full_fraction_is_identity() {
        let h = SymmetricMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, -2.0, -2.0, 0.5])).unwrap();
        assert_eq!(Compression::TopK { fraction: 1.0 }.apply(0, &h), h);
        assert_eq!(Compression::RandomSparsify { fraction: 1.0, seed: 4 }.apply(7, &h), h);
    }

    #[test]
    fn top_k_keeps_largest_entry() {
        let h = SymmetricMatrix::from_diagonal(&[3.0, 1.0]).unwrap();
        let out = Compression::TopK { fraction: 1.0 / 3.0 }.apply(0, &h);
        assert_eq!(out, SymmetricMatrix::from_diagonal(&[3.0, 0.0]).unwrap());
    }

    #[test]
    fn random_sparsify_is_unbiased() {
        let h = SymmetricMatrix::new(DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.5, -1.0, 1.0, 3.0, 0.5, 3.0, -4.0])).unwrap();
        let fraction = 0.3;
        let trials = 100_000;
        let mut sum = DMatrix::zeros(3, 3);
        for seed in 0..trials {
            sum += Compression::RandomSparsify { fraction, seed }.apply(0, &h).as_matrix();
        }
        let mean = sum / trials as f64;
        for i in 0..3 {
            for j in 0..3 {
                let v = h[(i, j)];
                // Each entry is v / f with probability f and 0 otherwise.
                let stderr = (v * v * (1.0 - fraction) / fraction / trials as f64).sqrt();
                assert!((mean[(i, j)] - v).abs() <= 5.0 * stderr + 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn fraction_range_checked() {
        assert!(CompressedEstimator::new(ExactEstimator, Compression::TopK { fraction: 0.0 }).is_err());
        assert!(CompressedEstimator::new(ExactEstimator, Compression::TopK { fraction: 1.5 }).is_err());
    }
}
