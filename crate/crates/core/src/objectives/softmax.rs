use nalgebra::{DMatrix, DVector};

use super::{check_dim, LabeledDataset, Objective, ProblemConstants, SampleStructure, SoftmaxModel};
use crate::error::{HatError, Result};
use crate::numerics::{DenseVector, SymmetricMatrix};

/// Cross-entropy `-log softmax(z)_label` and the probabilities `softmax(z)`.
pub(crate) fn cross_entropy(logits: &DenseVector, label: usize) -> (f64, DenseVector) {
    let m = logits.max();
    let exps = logits.map(|z| (z - m).exp());
    let total = exps.sum();
    let loss = m + total.ln() - logits[label];
    (loss, exps / total)
}

/// `diag(p) - p p^T`, the Hessian of cross-entropy in the logits.
pub(crate) fn logit_curvature(p: &DenseVector) -> DMatrix<f64> {
    DMatrix::from_diagonal(p) - p * p.transpose()
}

/// Softmax Gauss-Newton matrix: sum over samples of `J_i^T (diag p_i - p_i p_i^T) J_i`.
pub fn softmax_gauss_newton(model: &dyn SoftmaxModel, x: &DenseVector) -> SymmetricMatrix {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..model.num_samples() {
        let (z, jac) = model.logits_and_jacobian(x, i);
        let (_, p) = cross_entropy(&z, model.label(i));
        h += jac.transpose() * logit_curvature(&p) * &jac;
    }
    SymmetricMatrix::symmetrized(h * model.weight())
}

/// Affine-per-class softmax classifier:
/// `f(x) = sum_i -log softmax(W a_i + beta)_{b_i}` with `x = vec` of the rows
/// `(w_j, beta_j)` class by class.
#[derive(Debug, Clone)]
pub struct SoftmaxClassifier {
    /// Features with an appended constant column.
    augmented: DMatrix<f64>,
    labels: Vec<usize>,
    classes: usize,
    constants: ProblemConstants,
}

pub fn make_softmax_classifier(data: &LabeledDataset, classes: Option<usize>) -> Result<SoftmaxClassifier> {
    let (labels, seen) = data.class_indices("softmax classifier")?;
    let classes = classes.unwrap_or(seen);
    if classes < 2 {
        return Err(HatError::Data(format!("softmax classifier needs at least 2 classes, got {classes}")));
    }
    if let Some(&bad) = labels.iter().find(|&&b| b >= classes) {
        return Err(HatError::Data(format!("class index {bad} out of range for {classes} classes")));
    }
    let (n, d) = data.features.shape();
    let augmented = data.features.clone().insert_column(d, 1.0);
    let mut constants = ProblemConstants::new(0.0, true);
    constants.component_lipschitz = Some(0.0);
    // The third directional derivative of log-sum-exp is a third central
    // moment, at most 2 ||h||^3; logits move by at most ||(a_i, 1)|| ||dx||.
    constants.l2 = 2.0 * augmented.row_iter().map(|r| r.norm().powi(3)).sum::<f64>();
    debug_assert_eq!(augmented.nrows(), n);
    Ok(SoftmaxClassifier { augmented, labels, classes, constants })
}

impl SoftmaxClassifier {
    fn width(&self) -> usize {
        self.augmented.ncols()
    }

    fn weights(&self, x: &DenseVector) -> DMatrix<f64> {
        check_dim("softmax", self.dim(), x);
        DMatrix::from_row_slice(self.classes, self.width(), x.as_slice())
    }

    fn probabilities(&self, x: &DenseVector) -> (f64, Vec<DenseVector>) {
        let w = self.weights(x);
        let mut total = 0.0;
        let mut probs = Vec::with_capacity(self.labels.len());
        for (i, row) in self.augmented.row_iter().enumerate() {
            let z = &w * row.transpose();
            let (loss, p) = cross_entropy(&z, self.labels[i]);
            total += loss;
            probs.push(p);
        }
        (total, probs)
    }
}

impl SoftmaxModel for SoftmaxClassifier {
    fn num_samples(&self) -> usize {
        self.labels.len()
    }

    fn num_classes(&self) -> usize {
        self.classes
    }

    fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    fn weight(&self) -> f64 {
        1.0
    }

    fn logits_and_jacobian(&self, x: &DenseVector, i: usize) -> (DenseVector, DMatrix<f64>) {
        let w = self.weights(x);
        let a = self.augmented.row(i);
        let z = &w * a.transpose();
        let width = self.width();
        let mut jac = DMatrix::zeros(self.classes, self.dim());
        for j in 0..self.classes {
            jac.view_mut((j, j * width), (1, width)).copy_from(&a);
        }
        (z, jac)
    }

    fn component_lipschitz(&self) -> f64 {
        0.0
    }
}

impl Objective for SoftmaxClassifier {
    fn name(&self) -> &str {
        "softmax"
    }

    fn dim(&self) -> usize {
        self.classes * self.width()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        self.probabilities(x).0
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        let (_, probs) = self.probabilities(x);
        let mut g = DMatrix::zeros(self.classes, self.width());
        for (i, mut p) in probs.into_iter().enumerate() {
            p[self.labels[i]] -= 1.0;
            g += p * self.augmented.row(i);
        }
        DVector::from_iterator(self.dim(), g.transpose().iter().copied())
    }

    /// Closed form `sum_i (diag p_i - p_i p_i^T) (x) a_i a_i^T`.
    fn hessian(&self, x: &DenseVector) -> Result<SymmetricMatrix> {
        let (_, probs) = self.probabilities(x);
        let width = self.width();
        let mut h = DMatrix::zeros(self.dim(), self.dim());
        for (i, p) in probs.iter().enumerate() {
            let a = self.augmented.row(i);
            let outer = a.transpose() * a;
            let curv = logit_curvature(p);
            for j in 0..self.classes {
                for k in 0..self.classes {
                    let mut block = h.view_mut((j * width, k * width), (width, width));
                    block += &outer * curv[(j, k)];
                }
            }
        }
        SymmetricMatrix::new(h)
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    fn constants_mut(&mut self) -> &mut ProblemConstants {
        &mut self.constants
    }

    fn structure(&self) -> SampleStructure<'_> {
        SampleStructure::Softmax(self)
    }
}
