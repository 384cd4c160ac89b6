//! Oracles shared by integration test targets.

use hat_core::numerics::DenseVector;
use nalgebra::{DMatrix, DVector};

/// Brute-force minimum for n = 2: a fine angular grid on the boundary with
/// golden-section refinement around the best angle, plus the interior
/// stationary point when the model matrix is positive definite.
pub fn brute_force_2d(g: &DenseVector, m: &DMatrix<f64>, r: f64) -> f64 {
    let q = |d: &DenseVector| g.dot(d) + 0.5 * (d.transpose() * m * d)[0];
    let at = |t: f64| q(&DVector::from_vec(vec![r * t.cos(), r * t.sin()]));
    let n = 2001;
    let step = std::f64::consts::TAU / n as f64;
    let (mut best_t, mut best) = (0.0, f64::INFINITY);
    for i in 0..n {
        let t = i as f64 * step;
        let v = at(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    let (mut lo, mut hi) = (best_t - step, best_t + step);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (c, d) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
        if at(c) < at(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    best = best.min(at(0.5 * (lo + hi)));
    let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
    let det = a * c - b * b;
    if a > 0.0 && det > 0.0 {
        let d = DVector::from_vec(vec![-(c * g[0] - b * g[1]) / det, -(a * g[1] - b * g[0]) / det]);
        if d.norm() <= r {
            best = best.min(q(&d));
        }
    }
    best
}
