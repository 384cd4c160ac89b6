use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::softmax::{cross_entropy, logit_curvature};
use super::{
    check_dim, sample_hessian_lipschitz, LabeledDataset, LeastSquaresModel, Objective,
    ProblemConstants, SampleStructure, SoftmaxModel,
};
use crate::error::{HatError, Result};
use crate::numerics::{operator_norm, DenseVector, SymmetricMatrix};
use crate::rng;

/// One-hidden-layer network `phi(x, a) = V [tanh(W a + w0); 1]`.
///
/// Parameters are laid out as the hidden units `(W_k, w0_k)` followed by the
/// output rows `(V_j, v0_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TanhNet {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
}

struct Forward {
    logits: DenseVector,
    jacobian: DMatrix<f64>,
    /// Augmented input `(a, 1)`.
    input: DenseVector,
    slope: DenseVector,
    curvature: DenseVector,
}

impl TanhNet {
    pub fn num_params(&self) -> usize {
        self.hidden * (self.inputs + 1) + self.outputs * (self.hidden + 1)
    }

    fn output_offset(&self, j: usize) -> usize {
        self.hidden * (self.inputs + 1) + j * (self.hidden + 1)
    }

    fn forward(&self, x: &DenseVector, a: &[f64]) -> Forward {
        let (d, h) = (self.inputs, self.hidden);
        let input = DVector::from_iterator(d + 1, a.iter().copied().chain([1.0]));
        let mut act = DVector::zeros(h + 1);
        let mut slope = DVector::zeros(h);
        let mut curvature = DVector::zeros(h);
        act[h] = 1.0;
        for k in 0..h {
            let theta = x.rows(k * (d + 1), d + 1);
            let u = theta.dot(&input).tanh();
            act[k] = u;
            slope[k] = 1.0 - u * u;
            curvature[k] = -2.0 * u * slope[k];
        }
        let mut logits = DVector::zeros(self.outputs);
        let mut jacobian = DMatrix::zeros(self.outputs, self.num_params());
        for j in 0..self.outputs {
            let off = self.output_offset(j);
            let v = x.rows(off, h + 1);
            logits[j] = v.dot(&act);
            for k in 0..h {
                let coef = v[k] * slope[k];
                for l in 0..=d {
                    jacobian[(j, k * (d + 1) + l)] = coef * input[l];
                }
            }
            for k in 0..=h {
                jacobian[(j, off + k)] = act[k];
            }
        }
        Forward { logits, jacobian, input, slope, curvature }
    }

    /// Adds `weight * hess phi_j` to `out`.
    fn add_component_hessian(&self, x: &DenseVector, fw: &Forward, j: usize, weight: f64, out: &mut DMatrix<f64>) {
        let (d, h) = (self.inputs, self.hidden);
        let outer = &fw.input * fw.input.transpose();
        let off = self.output_offset(j);
        for k in 0..h {
            let base = k * (d + 1);
            let mut block = out.view_mut((base, base), (d + 1, d + 1));
            block += &outer * (weight * x[off + k] * fw.curvature[k]);
            for l in 0..=d {
                let v = weight * fw.slope[k] * fw.input[l];
                out[(base + l, off + k)] += v;
                out[(off + k, base + l)] += v;
            }
        }
    }

    fn component_hessian(&self, x: &DenseVector, a: &[f64], j: usize) -> SymmetricMatrix {
        let fw = self.forward(x, a);
        let mut m = DMatrix::zeros(self.num_params(), self.num_params());
        self.add_component_hessian(x, &fw, j, 1.0, &mut m);
        SymmetricMatrix::symmetrized(m)
    }

    /// Random parameters with entries uniform in `[-scale, scale]`.
    pub fn random_params(&self, scale: f64, seed: u64) -> DenseVector {
        let mut rng = rng::stream(seed, &[0x7a4]);
        DVector::from_fn(self.num_params(), |_, _| rng.random_range(-scale..=scale))
    }

    /// `1.2 * max ||hess phi_j(x, a_i)||` over `points` random parameter
    /// vectors in the box of radius `radius`, each paired with a random sample.
    fn sample_component_lipschitz(&self, features: &DMatrix<f64>, scale: f64, points: usize, radius: f64, seed: u64) -> Result<f64> {
        let mut rng = rng::stream(seed, &[0xc0de]);
        let mut best = 0.0f64;
        for _ in 0..points {
            let x = DVector::from_fn(self.num_params(), |_, _| rng.random_range(-radius..=radius));
            let i = rng.random_range(0..features.nrows());
            let a: Vec<f64> = features.row(i).iter().copied().collect();
            for j in 0..self.outputs {
                best = best.max(operator_norm(&self.component_hessian(&x, &a, j))?);
            }
        }
        Ok(1.2 * scale * best)
    }
}

fn rows_of(features: &DMatrix<f64>) -> Vec<Vec<f64>> {
    features.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Mean squared error of a scalar tanh network,
/// `1/2 sum_i r_i^2` with `r_i = sqrt(2/N) (phi(x, a_i) - b_i)`.
#[derive(Debug, Clone)]
pub struct TanhLeastSquares {
    net: TanhNet,
    samples: Vec<Vec<f64>>,
    targets: DenseVector,
    scale: f64,
    component_l: f64,
    constants: ProblemConstants,
}

impl TanhLeastSquares {
    pub fn new(data: &LabeledDataset, hidden: usize, seed: u64) -> Result<Self> {
        if hidden == 0 {
            return Err(HatError::InvalidInput("hidden layer must be non-empty".into()));
        }
        let net = TanhNet { inputs: data.num_features(), hidden, outputs: 1 };
        let scale = (2.0 / data.num_samples() as f64).sqrt();
        let component_l = net.sample_component_lipschitz(&data.features, scale, 2000, 2.0, seed)?;
        let mut constants = ProblemConstants::new(f64::INFINITY, false);
        constants.component_lipschitz = Some(component_l);
        let mut p = TanhLeastSquares {
            net,
            samples: rows_of(&data.features),
            targets: DenseVector::from_column_slice(&data.labels),
            scale,
            component_l,
            constants,
        };
        let zero = DVector::zeros(net.num_params());
        p.constants.l2 = 1.5 * sample_hessian_lipschitz(&p, &zero, 2.0, 200, seed ^ 0x12)?;
        Ok(p)
    }

    pub fn net(&self) -> TanhNet {
        self.net
    }

    /// Replaces the targets, e.g. by the network's own outputs at some
    /// parameter vector to obtain a zero-residual instance.
    pub fn with_targets(mut self, targets: DenseVector) -> Self {
        assert_eq!(targets.len(), self.targets.len());
        self.targets = targets;
        self
    }

    pub fn outputs(&self, x: &DenseVector) -> DenseVector {
        DVector::from_iterator(self.samples.len(), self.samples.iter().map(|a| self.net.forward(x, a).logits[0]))
    }
}

impl LeastSquaresModel for TanhLeastSquares {
    fn residuals(&self, x: &DenseVector) -> DenseVector {
        check_dim("tanh-ls", self.dim(), x);
        (self.outputs(x) - &self.targets) * self.scale
    }

    fn jacobian(&self, x: &DenseVector) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.samples.len(), self.dim());
        for (i, a) in self.samples.iter().enumerate() {
            jac.set_row(i, &(self.net.forward(x, a).jacobian.row(0) * self.scale));
        }
        jac
    }

    fn component_lipschitz(&self) -> f64 {
        self.component_l
    }
}

impl Objective for TanhLeastSquares {
    fn name(&self) -> &str {
        "tanh-least-squares"
    }

    fn dim(&self) -> usize {
        self.net.num_params()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        0.5 * self.residuals(x).norm_squared()
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        self.jacobian(x).tr_mul(&self.residuals(x))
    }

    fn hessian(&self, x: &DenseVector) -> Result<SymmetricMatrix> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        let s2 = self.scale * self.scale;
        for (i, a) in self.samples.iter().enumerate() {
            let fw = self.net.forward(x, a);
            let grad = fw.jacobian.row(0);
            h += grad.transpose() * grad * s2;
            self.net.add_component_hessian(x, &fw, 0, s2 * (fw.logits[0] - self.targets[i]), &mut h);
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
        SampleStructure::LeastSquares(self)
    }
}

/// Softmax cross-entropy over the outputs of a tanh network.
#[derive(Debug, Clone)]
pub struct TanhSoftmax {
    net: TanhNet,
    samples: Vec<Vec<f64>>,
    labels: Vec<usize>,
    component_l: f64,
    constants: ProblemConstants,
}

impl TanhSoftmax {
    pub fn new(data: &LabeledDataset, hidden: usize, classes: Option<usize>, seed: u64) -> Result<Self> {
        let (labels, seen) = data.class_indices("tanh softmax")?;
        let classes = classes.unwrap_or(seen);
        if classes < 2 || hidden == 0 {
            return Err(HatError::InvalidInput("need at least 2 classes and a non-empty hidden layer".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&b| b >= classes) {
            return Err(HatError::Data(format!("class index {bad} out of range for {classes} classes")));
        }
        let net = TanhNet { inputs: data.num_features(), hidden, outputs: classes };
        let component_l = net.sample_component_lipschitz(&data.features, 1.0, 2000, 2.0, seed)?;
        let mut constants = ProblemConstants::new(f64::INFINITY, false);
        constants.component_lipschitz = Some(component_l);
        let mut p = TanhSoftmax { net, samples: rows_of(&data.features), labels, component_l, constants };
        let zero = DVector::zeros(net.num_params());
        p.constants.l2 = 1.5 * sample_hessian_lipschitz(&p, &zero, 2.0, 200, seed ^ 0x12)?;
        Ok(p)
    }

    pub fn net(&self) -> TanhNet {
        self.net
    }
}

impl SoftmaxModel for TanhSoftmax {
    fn num_samples(&self) -> usize {
        self.samples.len()
    }

    fn num_classes(&self) -> usize {
        self.net.outputs
    }

    fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    fn weight(&self) -> f64 {
        1.0
    }

    fn logits_and_jacobian(&self, x: &DenseVector, i: usize) -> (DenseVector, DMatrix<f64>) {
        let fw = self.net.forward(x, &self.samples[i]);
        (fw.logits, fw.jacobian)
    }

    fn component_lipschitz(&self) -> f64 {
        self.component_l
    }
}

impl Objective for TanhSoftmax {
    fn name(&self) -> &str {
        "tanh-softmax"
    }

    fn dim(&self) -> usize {
        self.net.num_params()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        check_dim("tanh-softmax", self.dim(), x);
        self.samples
            .iter()
            .zip(&self.labels)
            .map(|(a, &b)| cross_entropy(&self.net.forward(x, a).logits, b).0)
            .sum()
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        let mut g = DVector::zeros(self.dim());
        for (a, &b) in self.samples.iter().zip(&self.labels) {
            let fw = self.net.forward(x, a);
            let (_, mut p) = cross_entropy(&fw.logits, b);
            p[b] -= 1.0;
            g += fw.jacobian.tr_mul(&p);
        }
        g
    }

    fn hessian(&self, x: &DenseVector) -> Result<SymmetricMatrix> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for (a, &b) in self.samples.iter().zip(&self.labels) {
            let fw = self.net.forward(x, a);
            let (_, p) = cross_entropy(&fw.logits, b);
            h += fw.jacobian.transpose() * logit_curvature(&p) * &fw.jacobian;
            for j in 0..self.net.outputs {
                let resid = p[j] - if j == b { 1.0 } else { 0.0 };
                self.net.add_component_hessian(x, &fw, j, resid, &mut h);
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
