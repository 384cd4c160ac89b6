use nalgebra::DMatrix;

use super::{
    check_dim, log1p_exp_neg, sigmoid, weighted_gram, GlmModel, LabeledDataset, Objective,
    ProblemConstants, SampleStructure,
};
use crate::error::Result;
use crate::numerics::{DenseVector, SymmetricMatrix};

/// Supremum of the third derivative of `t -> log(1 + exp(-t))`.
const LOGISTIC_THIRD_DERIVATIVE: f64 = 0.096_225_044_864_937_63; // 1 / (6 sqrt 3)

/// Mean logistic loss `(1/N) sum log(1 + exp(-b_i a_i^T x))`.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    design: DMatrix<f64>,
    labels: DenseVector,
    constants: ProblemConstants,
}

pub fn make_logistic(data: &LabeledDataset) -> Result<LogisticProblem> {
    data.require_pm1("logistic regression")?;
    let n = data.num_samples() as f64;
    let l2 = data
        .features
        .row_iter()
        .map(|r| r.norm().powi(3))
        .sum::<f64>()
        * LOGISTIC_THIRD_DERIVATIVE
        / n;
    Ok(LogisticProblem {
        design: data.features.clone(),
        labels: DenseVector::from_column_slice(&data.labels),
        constants: ProblemConstants::new(l2, true),
    })
}

impl LogisticProblem {
    fn margins(&self, x: &DenseVector) -> DenseVector {
        check_dim("logistic", self.dim(), x);
        (&self.design * x).component_mul(&self.labels)
    }
}

impl GlmModel for LogisticProblem {
    fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    fn curvature_weights(&self, x: &DenseVector) -> DenseVector {
        let n = self.design.nrows() as f64;
        (&self.design * x).map(|t| {
            let s = sigmoid(t);
            s * (1.0 - s) / n
        })
    }
}

impl Objective for LogisticProblem {
    fn name(&self) -> &str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let m = self.margins(x);
        m.iter().map(|&m| log1p_exp_neg(m)).sum::<f64>() / m.len() as f64
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        let n = self.design.nrows() as f64;
        let m = self.margins(x);
        let coef = DenseVector::from_fn(m.len(), |i, _| -self.labels[i] * sigmoid(-m[i]) / n);
        self.design.tr_mul(&coef)
    }

    fn hessian(&self, x: &DenseVector) -> Result<SymmetricMatrix> {
        Ok(weighted_gram(&self.design, &self.curvature_weights(x)))
    }

    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    fn constants_mut(&mut self) -> &mut ProblemConstants {
        &mut self.constants
    }

    fn structure(&self) -> SampleStructure<'_> {
        SampleStructure::Glm(self)
    }
}
