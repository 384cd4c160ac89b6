//! Dense linear-algebra kernels: symmetric matrices, eigendecomposition,
//! operator norms and SPD solves.
//!
//! Everything here is dense and sized for desk-scale problems (a few hundred
//! unknowns). Matrices are symmetrized on construction, so downstream code can
//! rely on exact symmetry.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};

use crate::error::{HatError, Result};

pub type DenseVector = DVector<f64>;

/// Largest dimension for which `operator_norm` uses a full eigendecomposition.
pub const EXACT_NORM_MAX_DIM: usize = 200;

/// Largest dimension accepted by `eigendecompose`.
pub const EIGEN_MAX_DIM: usize = 2000;

const EIGEN_MAX_SWEEPS: usize = 10_000;
const POWER_MAX_ITERS: usize = 5_000;

/// Validates that every entry of `v` is finite.
pub fn checked_vector(v: DenseVector) -> Result<DenseVector> {
    if let Some(i) = v.iter().position(|e| !e.is_finite()) {
        return Err(HatError::InvalidInput(format!(
            "vector entry {i} is not finite ({})",
            v[i]
        )));
    }
    Ok(v)
}

/// A dense, exactly symmetric matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Builds a symmetric matrix from `m` by averaging it with its transpose.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(HatError::InvalidInput(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|e| !e.is_finite()) {
            return Err(HatError::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without the finiteness check. Callers guarantee finiteness.
    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        SymmetricMatrix(m)
    }

    pub fn zeros(n: usize) -> Self {
        SymmetricMatrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        SymmetricMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        SymmetricMatrix(&self.0 * alpha)
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &SymmetricMatrix, alpha: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(HatError::InvalidInput(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(SymmetricMatrix(&self.0 + &other.0 * alpha))
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += shift;
        }
        SymmetricMatrix(m)
    }

    pub fn mul_vec(&self, v: &DenseVector) -> DenseVector {
        &self.0 * v
    }

    pub fn quadratic_form(&self, v: &DenseVector) -> f64 {
        v.dot(&(&self.0 * v))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0.0)
    }
}

impl Deref for SymmetricMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// stored column-wise.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn spectral_radius(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }
}

pub fn eigendecompose(m: &SymmetricMatrix) -> Result<Eigen> {
    let n = m.dim();
    if n == 0 {
        return Err(HatError::InvalidInput("empty matrix".into()));
    }
    if n > EIGEN_MAX_DIM {
        return Err(HatError::InvalidInput(format!(
            "dimension {n} exceeds the dense eigensolver limit {EIGEN_MAX_DIM}"
        )));
    }
    if m.iter().any(|e| !e.is_finite()) {
        return Err(HatError::InvalidInput("matrix has non-finite entries".into()));
    }
    let eig = m
        .as_matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_SWEEPS)
        .ok_or_else(|| HatError::Numeric {
            iterations: EIGEN_MAX_SWEEPS,
            message: "symmetric eigensolver did not converge".into(),
        })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only, ascending. Cheaper than [`eigendecompose`].
pub fn eigenvalues(m: &SymmetricMatrix) -> Result<DVector<f64>> {
    let n = m.dim();
    if n == 0 {
        return Err(HatError::InvalidInput("empty matrix".into()));
    }
    if n > EIGEN_MAX_DIM {
        return Err(HatError::InvalidInput(format!(
            "dimension {n} exceeds the dense eigensolver limit {EIGEN_MAX_DIM}"
        )));
    }
    if m.iter().any(|e| !e.is_finite()) {
        return Err(HatError::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut values = m.as_matrix().symmetric_eigenvalues();
    values.as_mut_slice().sort_by(f64::total_cmp);
    Ok(values)
}

pub fn min_eigenvalue(m: &SymmetricMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?[0])
}

/// Spectral norm `max |eigenvalue|` of a symmetric matrix.
pub fn operator_norm(m: &SymmetricMatrix) -> Result<f64> {
    let n = m.dim();
    if m.iter().any(|e| !e.is_finite()) {
        return Err(HatError::InvalidInput("matrix has non-finite entries".into()));
    }
    if n == 0 || m.is_zero() {
        return Ok(0.0);
    }
    if n <= EXACT_NORM_MAX_DIM {
        let values = eigenvalues(m)?;
        return Ok(values[0].abs().max(values[n - 1].abs()));
    }
    match power_norm(m) {
        Some(norm) => Ok(norm),
        // Slow convergence means clustered top eigenvalues; fall back to the
        // dense solver rather than return a loose estimate.
        None => Ok(eigendecompose(m)?.spectral_radius()),
    }
}

/// Power iteration on `M^2` from the normalized all-ones vector. Squaring
/// folds `+lambda` and `-lambda` together so the iteration cannot oscillate.
fn power_norm(m: &SymmetricMatrix) -> Option<f64> {
    let n = m.dim();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut estimate = 0.0_f64;
    for _ in 0..POWER_MAX_ITERS {
        let w = m.mul_vec(&m.mul_vec(&v));
        let norm = w.norm();
        if norm == 0.0 {
            // all-ones seed in the null space of M^2; restart from a basis vector
            v = DVector::zeros(n);
            v[0] = 1.0;
            continue;
        }
        let theta = v.dot(&w).max(0.0);
        let next = theta.sqrt();
        let residual = (&w - &v * theta).norm();
        v = w / norm;
        // the residual bounds the distance of theta to the spectrum of M^2
        if (next - estimate).abs() <= 1e-13 * next && residual <= 1e-11 * theta {
            return Some(next);
        }
        estimate = next;
    }
    None
}

/// Solves `M d = b` for symmetric positive definite `M`.
pub fn solve_spd(m: &SymmetricMatrix, b: &DenseVector) -> Result<DenseVector> {
    if m.dim() != b.len() {
        return Err(HatError::InvalidInput(format!(
            "dimension mismatch: matrix {} vs rhs {}",
            m.dim(),
            b.len()
        )));
    }
    if b.iter().any(|e| !e.is_finite()) || m.iter().any(|e| !e.is_finite()) {
        return Err(HatError::InvalidInput("non-finite input to solve_spd".into()));
    }
    let singular = || -> HatError {
        let min_eigenvalue = min_eigenvalue(m).unwrap_or(f64::NAN);
        HatError::SingularSystem { min_eigenvalue }
    };
    let chol = m.as_matrix().clone().cholesky().ok_or_else(singular)?;

    // Cholesky succeeds on some numerically singular matrices; reject those
    // whose pivots show a condition number beyond 1e12.
    let l = chol.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for i in 0..m.dim() {
        let p = l[(i, i)] * l[(i, i)];
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if lo <= 1e-14 * hi {
        let eig = eigendecompose(m)?;
        if eig.min() <= 1e-12 * eig.max() {
            return Err(HatError::SingularSystem {
                min_eigenvalue: eig.min(),
            });
        }
    }

    let mut d = chol.solve(b);
    // One step of iterative refinement keeps the residual at roundoff level
    // for moderately conditioned systems.
    let r = b - m.mul_vec(&d);
    d += chol.solve(&r);
    Ok(d)
}

/// Solves `M d = b` for any nonsingular symmetric `M` through its
/// eigendecomposition.
pub fn solve_symmetric(eig: &Eigen, b: &DenseVector) -> DenseVector {
    let coeffs = eig.vectors.tr_mul(b);
    let scaled = DVector::from_iterator(
        coeffs.len(),
        coeffs.iter().zip(eig.values.iter()).map(|(c, l)| c / l),
    );
    &eig.vectors * scaled
}

/// Random symmetric matrix `Q diag(lambda) Q^T` with `Q` a Haar-like random
/// rotation and `lambda` evenly spaced over `[lo, hi]` (both endpoints
/// attained; `lo` alone when `n = 1`).
pub fn random_symmetric_with_spectrum(n: usize, lo: f64, hi: f64, seed: u64) -> Result<SymmetricMatrix> {
    use rand_distr::{Distribution, StandardNormal};
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(HatError::InvalidInput(format!(
            "need n >= 1 and finite lo <= hi, got n = {n}, [{lo}, {hi}]"
        )));
    }
    let mut rng = crate::rng::stream(seed, &[0x5bd]);
    let g: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let q = g.qr().q();
    let spread = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    let mut lambda = DVector::from_fn(n, |i, _| lo + spread * i as f64);
    if n > 1 {
        lambda[n - 1] = hi;
    }
    Ok(SymmetricMatrix::symmetrized(&q * DMatrix::from_diagonal(&lambda) * q.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::assert_close;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    mod approx_eq {
        macro_rules! assert_close {
            ($a:expr, $b:expr, $tol:expr) => {{
                let (a, b, tol): (f64, f64, f64) = ($a, $b, $tol);
                assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
            }};
        }
        pub(crate) use assert_close;
    }

    fn random_symmetric(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymmetricMatrix::new(&m + m.transpose()).unwrap()
    }

    fn random_spd(n: usize, seed: u64) -> SymmetricMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymmetricMatrix::new(&a * a.transpose()).unwrap().shifted(0.5)
    }

    /// Cyclic Jacobi rotations: slow but independent of the production
    /// eigensolver.
    fn jacobi_eigenvalues(m: &SymmetricMatrix) -> Vec<f64> {
        let mut a = m.as_matrix().clone();
        let n = a.nrows();
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    #[test]
    fn construction_symmetrizes_and_rejects_nan() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        let s = SymmetricMatrix::new(m).unwrap();
        assert_eq!(s[(0, 1)], 3.0);
        assert_eq!(s[(1, 0)], 3.0);
        let bad = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(SymmetricMatrix::new(bad), Err(HatError::InvalidInput(_))));
        assert!(checked_vector(DVector::from_vec(vec![1.0, f64::INFINITY])).is_err());
    }

    #[test]
    fn operator_norm_small_cases() {
        let d = SymmetricMatrix::from_diagonal(&[2.0, -3.0]).unwrap();
        assert_eq!(operator_norm(&d).unwrap(), 3.0);
        assert_eq!(operator_norm(&SymmetricMatrix::zeros(4)).unwrap(), 0.0);
    }

    #[test]
    fn operator_norm_matches_jacobi_oracle() {
        let m = random_symmetric(5, 7);
        let oracle = jacobi_eigenvalues(&m);
        let expect = oracle[0].abs().max(oracle[4].abs());
        assert_close!(operator_norm(&m).unwrap(), expect, 1e-10 * expect);
    }

    #[test]
    fn power_iteration_path_matches_dense() {
        let n = EXACT_NORM_MAX_DIM + 20;
        let m = random_symmetric(n, 3);
        let dense = eigendecompose(&m).unwrap().spectral_radius();
        let norm = operator_norm(&m).unwrap();
        assert_close!(norm, dense, 1e-10 * dense);
    }

    #[test]
    fn eigendecompose_examples() {
        let d = SymmetricMatrix::from_diagonal(&[3.0, 1.0, 2.0]).unwrap();
        let e = eigendecompose(&d).unwrap();
        assert_eq!(e.values.as_slice(), &[1.0, 2.0, 3.0]);

        let u = DVector::from_vec(vec![1.0, 2.0, 2.0, 4.0]).normalize();
        let reflector =
            SymmetricMatrix::new(DMatrix::identity(4, 4) - 2.0 * &u * u.transpose()).unwrap();
        let e = eigendecompose(&reflector).unwrap();
        assert_close!(e.values[0], -1.0, 1e-12);
        for i in 1..4 {
            assert_close!(e.values[i], 1.0, 1e-12);
        }
    }

    #[test]
    fn eigendecompose_reconstructs_random_matrix() {
        for seed in 0..5 {
            let m = random_symmetric(12, seed);
            let e = eigendecompose(&m).unwrap();
            let norm = e.spectral_radius();
            let recon = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
            assert!((recon - m.as_matrix()).norm() <= 1e-9 * norm);
            let gram = e.vectors.transpose() * &e.vectors;
            assert!((gram - DMatrix::<f64>::identity(12, 12)).amax() <= 1e-10);
            for i in 0..12 {
                let v = e.vectors.column(i).into_owned();
                let r = m.mul_vec(&v) - e.values[i] * &v;
                assert!(r.norm() <= 1e-9 * norm);
            }
            let oracle = jacobi_eigenvalues(&m);
            for (a, b) in e.values.iter().zip(oracle.iter()) {
                assert_close!(*a, *b, 1e-9 * norm);
            }
        }
    }

    #[test]
    fn solve_spd_examples() {
        let b = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        let id = SymmetricMatrix::identity(3);
        assert_eq!(solve_spd(&id, &b).unwrap(), b);
        let two = id.scaled(2.0);
        assert_eq!(solve_spd(&two, &b).unwrap(), &b / 2.0);
        let m = random_spd(4, 11);
        let b = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5]);
        let d = solve_spd(&m, &b).unwrap();
        assert!((m.mul_vec(&d) - &b).norm() <= 1e-10 * (1.0 + b.norm()));
    }

    #[test]
    fn prescribed_spectrum_is_attained() {
        let m = random_symmetric_with_spectrum(6, 7.0 / 12.0, 1.0, 3).unwrap();
        let eig = jacobi_eigenvalues(&m);
        assert_close!(eig[0], 7.0 / 12.0, 1e-12);
        assert_close!(eig[5], 1.0, 1e-12);
        assert!(eig.windows(2).all(|w| w[1] - w[0] > 0.05));
        assert!(random_symmetric_with_spectrum(0, 1.0, 2.0, 0).is_err());
        assert!(random_symmetric_with_spectrum(3, 2.0, 1.0, 0).is_err());
    }

    #[test]
    fn solve_spd_rejects_indefinite() {
        let m = SymmetricMatrix::from_diagonal(&[1.0, -0.5]).unwrap();
        match solve_spd(&m, &DVector::from_vec(vec![1.0, 1.0])) {
            Err(HatError::SingularSystem { min_eigenvalue }) => assert_eq!(min_eigenvalue, -0.5),
            other => panic!("unexpected {other:?}"),
        }
        let near = SymmetricMatrix::from_diagonal(&[1.0, 1e-15]).unwrap();
        assert!(matches!(
            solve_spd(&near, &DVector::from_vec(vec![1.0, 1.0])),
            Err(HatError::SingularSystem { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn norm_agrees_with_eigenvalues(n in 1usize..50, seed in any::<u64>()) {
                let m = random_symmetric(n, seed);
                let e = eigendecompose(&m).unwrap();
                let norm = operator_norm(&m).unwrap();
                prop_assert!((norm - e.spectral_radius()).abs() <= 1e-9 * norm.max(1e-300));
            }

            #[test]
            fn norm_is_absolutely_homogeneous(n in 1usize..20, seed in any::<u64>(), alpha in -50.0f64..50.0) {
                let m = random_symmetric(n, seed);
                let base = operator_norm(&m).unwrap();
                let scaled = operator_norm(&m.scaled(alpha)).unwrap();
                prop_assert!((scaled - alpha.abs() * base).abs() <= 1e-12 * (alpha.abs() * base).max(1e-300));
            }

            #[test]
            fn spd_solve_inverts_multiply(n in 1usize..30, seed in any::<u64>()) {
                let m = random_spd(n, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
                let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
                let b = m.mul_vec(&x);
                let d = solve_spd(&m, &b).unwrap();
                prop_assert!((m.mul_vec(&d) - &b).norm() <= 1e-10 * (1.0 + b.norm()));
            }
        }
    }
}
