//! Deterministic synthetic datasets.

use std::fmt::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{sigmoid, LabeledDataset};
use crate::rng;

/// Sizes of the one-hot groups of the a9a (adult) encoding; they sum to 123.
pub const A9A_GROUPS: [usize; 14] = [5, 8, 5, 16, 5, 7, 14, 6, 5, 2, 2, 2, 5, 41];

/// At most this many categories per group are ever drawn, so that every
/// active column is seen often enough to carry both labels.
fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

const MAX_ACTIVE_CATEGORIES: usize = 12;

/// One-hot categorical data shaped like a9a: 123 binary columns, exactly one
/// active column per group, labels in {-1, +1} from a planted logistic model.
/// Every active column carries both labels, so the logistic loss attains its
/// infimum.
pub fn a9a_like(rows: usize, seed: u64) -> LabeledDataset {
    assert!(rows > 0);
    let d: usize = A9A_GROUPS.iter().sum();
    for attempt in 0u64.. {
        let mut rng = rng::stream(seed, &[0xa9a, attempt]);
        let weights: Vec<f64> = (0..d).map(|_| 0.8 * normal(&mut rng)).collect();
        let mut features = DMatrix::zeros(rows, d);
        let mut labels = Vec::with_capacity(rows);
        for i in 0..rows {
            let mut offset = 0;
            let mut score = -0.8;
            for &size in &A9A_GROUPS {
                let active = size.min(MAX_ACTIVE_CATEGORIES);
                let probs: Vec<f64> = (0..active).map(|j| 1.0 / (1.0 + j as f64).sqrt()).collect();
                let total: f64 = probs.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = active - 1;
                for (j, p) in probs.iter().enumerate() {
                    if u < *p {
                        pick = j;
                        break;
                    }
                    u -= p;
                }
                features[(i, offset + pick)] = 1.0;
                score += weights[offset + pick];
                offset += size;
            }
            labels.push(if rng.random::<f64>() < sigmoid(score) { 1.0 } else { -1.0 });
        }
        let balanced = (0..d).all(|j| {
            let col = features.column(j);
            let pos = col.iter().zip(&labels).any(|(&v, &b)| v != 0.0 && b > 0.0);
            let neg = col.iter().zip(&labels).any(|(&v, &b)| v != 0.0 && b < 0.0);
            pos == neg
        });
        if balanced {
            return LabeledDataset::new(features, labels).expect("generated data is finite");
        }
    }
    unreachable!()
}

/// Standard-normal features scaled by `1/sqrt(d)` with labels in {-1, +1}
/// drawn from a planted logistic model.
pub fn gaussian_binary(rows: usize, dim: usize, seed: u64) -> LabeledDataset {
    let mut rng = rng::stream(seed, &[0xb1]);
    let scale = 1.0 / (dim as f64).sqrt();
    let features = DMatrix::from_fn(rows, dim, |_, _| 2.0 * scale * normal(&mut rng));
    let w: Vec<f64> = (0..dim).map(|_| normal(&mut rng)).collect();
    let labels = (0..rows)
        .map(|i| {
            let t: f64 = features.row(i).iter().zip(&w).map(|(a, b)| a * b).sum();
            if rng.random::<f64>() < sigmoid(t) { 1.0 } else { -1.0 }
        })
        .collect();
    LabeledDataset::new(features, labels).expect("generated data is finite")
}

/// Gaussian features with class indices `0..classes` (every class present
/// when `rows >= classes`).
pub fn gaussian_multiclass(rows: usize, dim: usize, classes: usize, seed: u64) -> LabeledDataset {
    let mut rng = rng::stream(seed, &[0xc1]);
    let features = DMatrix::from_fn(rows, dim, |_, _| normal(&mut rng));
    let labels = (0..rows)
        .map(|i| if i < classes { i as f64 } else { rng.random_range(0..classes) as f64 })
        .collect();
    LabeledDataset::new(features, labels).expect("generated data is finite")
}

/// Gaussian design `A` scaled by `1/sqrt(rows)` and Gaussian target `b` for
/// a linear least-squares problem.
pub fn random_least_squares(rows: usize, dim: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = rng::stream(seed, &[0x15]);
    let scale = 1.0 / (rows as f64).sqrt();
    let a = DMatrix::from_fn(rows, dim, |_, _| scale * normal(&mut rng));
    let b = DVector::from_fn(rows, |_, _| normal(&mut rng));
    (a, b)
}

/// LIBSVM text for a dataset (zero entries omitted, labels printed as `+1`/`-1`
/// for binary data and as integers otherwise).
pub fn to_libsvm_string(data: &LabeledDataset) -> String {
    let mut out = String::new();
    for (i, row) in data.features.row_iter().enumerate() {
        let b = data.labels[i];
        if b == 1.0 {
            out.push_str("+1");
        } else {
            write!(out, "{b}").unwrap();
        }
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                write!(out, " {}:{v:?}", j + 1).unwrap();
            }
        }
        out.push('\n');
    }
    out
}
