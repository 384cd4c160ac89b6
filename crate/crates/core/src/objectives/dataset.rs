use nalgebra::DMatrix;

use crate::error::{HatError, Result};

/// Dense feature matrix (one row per sample) with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: DMatrix<f64>,
    pub labels: Vec<f64>,
}

impl LabeledDataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(HatError::Data("dataset must have at least one row and one column".into()));
        }
        if features.nrows() != labels.len() {
            return Err(HatError::Data(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.iter().chain(labels.iter()).any(|v| !v.is_finite()) {
            return Err(HatError::Data("non-finite entry in dataset".into()));
        }
        Ok(LabeledDataset { features, labels })
    }

    pub fn num_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    /// First `n` rows (or all of them).
    pub fn head(&self, n: usize) -> LabeledDataset {
        let n = n.min(self.num_samples());
        LabeledDataset {
            features: self.features.rows(0, n).into_owned(),
            labels: self.labels[..n].to_vec(),
        }
    }

    pub(crate) fn require_pm1(&self, problem: &str) -> Result<()> {
        match self.labels.iter().find(|&&b| b != 1.0 && b != -1.0) {
            Some(b) => Err(HatError::Data(format!("{problem} needs labels in {{-1, +1}}, found {b}"))),
            None => Ok(()),
        }
    }

    pub(crate) fn class_indices(&self, problem: &str) -> Result<(Vec<usize>, usize)> {
        let mut classes = Vec::with_capacity(self.labels.len());
        for &b in &self.labels {
            if b < 0.0 || b.fract() != 0.0 || b > u32::MAX as f64 {
                return Err(HatError::Data(format!("{problem} needs class indices, found {b}")));
            }
            classes.push(b as usize);
        }
        let c = classes.iter().max().map_or(0, |m| m + 1);
        Ok((classes, c))
    }

    /// Largest row norm.
    pub fn max_row_norm(&self) -> f64 {
        self.features.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
    }
}
