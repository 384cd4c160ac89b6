//! Experiment configuration: one JSON file per run.
//!
//! Relative paths (datasets, outputs) are resolved against the directory of
//! the config file. All randomness is derived from the top-level `seed`.

use std::path::{Path, PathBuf};

use hat_core::baselines::BaselineConfig;
use hat_core::bregman::{make_entropic_simplex_scaling, make_quadratic_scaling, ScalingFunction};
use hat_core::estimators::{
    CompressedEstimator, Compression, ExactEstimator, GgnEstimator, GgnKind, HessianEstimator, HutchinsonEstimator,
    LazyEstimator, ProbeMode, QuasiNewtonEstimator, QuasiNewtonKind,
};
use hat_core::hat::HatConfig;
use hat_core::numerics::{random_symmetric_with_spectrum, DenseVector, SymmetricMatrix};
use hat_core::objectives::{
    load_libsvm, make_logistic, make_nlls, make_rosenbrock, make_softmax_classifier, synthetic, LabelMap,
    LabeledDataset, LibsvmOptions, Objective, QuadraticProblem, TanhLeastSquares, TanhSoftmax, WithoutHessian,
};
use hat_core::rng::derive_seed;
use hat_core::HatError;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Counters separating the random streams derived from the config seed.
const DATA_STREAM: u64 = 1;
const SCALING_STREAM: u64 = 2;
const ESTIMATOR_STREAM: u64 = 3;
const MODEL_STREAM: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Method label in traces and merged comparison output.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub scaling: ScalingSpec,
    #[serde(default)]
    pub estimator: Option<EstimatorSpec>,
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub delta_study: Option<DeltaStudySpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// `1/2 ||A x - b||^2` with `A` the features and `b` the labels.
    LeastSquaresQuadratic,
    Logistic,
    Nlls,
    Softmax,
    Rosenbrock,
    TanhLeastSquares,
    TanhSoftmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    #[serde(default)]
    pub data: Option<DataSpec>,
    /// Hidden width of the tanh networks.
    #[serde(default)]
    pub hidden: Option<usize>,
    /// Class count of the softmax problems; inferred from labels when absent.
    #[serde(default)]
    pub classes: Option<usize>,
    /// Override of the Hessian-Lipschitz constant.
    #[serde(default)]
    pub l2: Option<f64>,
    #[serde(default)]
    pub f_star: Option<f64>,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    /// Hide the Hessian oracle from estimators and audits.
    #[serde(default)]
    pub hide_hessian: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    /// LIBSVM file. Labels follow `label_map`; the mushrooms convention maps
    /// `1 -> +1` and `2 -> -1`.
    Libsvm {
        path: PathBuf,
        label_map: LabelMap,
        #[serde(default)]
        num_features: Option<usize>,
        #[serde(default)]
        truncate: bool,
        #[serde(default)]
        max_rows: Option<usize>,
    },
    A9aLike { rows: usize },
    GaussianBinary { rows: usize, dim: usize },
    GaussianMulticlass { rows: usize, dim: usize, classes: usize },
    RandomLeastSquares { rows: usize, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatrixSpec {
    Identity,
    /// Random rotation of an evenly spaced spectrum over `[lambda_min, lambda_max]`.
    RandomSpd {
        lambda_min: f64,
        lambda_max: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalingSpec {
    Quadratic {
        #[serde(default = "identity_spec")]
        b: MatrixSpec,
    },
    Entropic {
        theta: f64,
        #[serde(default = "identity_spec")]
        b: MatrixSpec,
    },
}

fn identity_spec() -> MatrixSpec {
    MatrixSpec::Identity
}

impl Default for ScalingSpec {
    fn default() -> Self {
        ScalingSpec::Quadratic { b: MatrixSpec::Identity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Exact,
    Bfgs,
    Sr1,
    Dfp,
    Ggn,
    Hutchinson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CompressionSpec {
    TopK { fraction: f64 },
    RandomSparsify { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// Gauss-Newton variant; `auto` when absent.
    #[serde(default)]
    pub ggn: Option<GgnKind>,
    /// Rademacher probe count; the standard basis when absent.
    #[serde(default)]
    pub probes: Option<usize>,
    #[serde(default)]
    pub lazy_period: Option<usize>,
    #[serde(default)]
    pub compression: Option<CompressionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum OptimizerSpec {
    Hat(HatConfig),
    Baseline(BaselineConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaStudySpec {
    pub iters: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Trace CSV; the metadata goes next to it with a `.json` extension.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// Delta-study CSV.
    #[serde(default)]
    pub delta: Option<PathBuf>,
}

/// A parsed config together with the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub base: PathBuf,
    pub config: ExperimentConfig,
    /// The file contents as JSON, echoed into trace metadata.
    pub echo: serde_json::Value,
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn load_config(path: &Path) -> CliResult<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |message: String| CliError::Config { path: path.display().to_string(), message };
    let config = parse_config(&text).map_err(|e| bad(e.to_string()))?;
    let echo = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let loaded = LoadedConfig { path: path.to_path_buf(), base, config, echo };
    loaded.validate()?;
    Ok(loaded)
}

impl LoadedConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Problem spec with dataset paths made absolute, for comparing configs
    /// that live in different directories.
    pub fn resolved_problem(&self) -> ProblemSpec {
        let mut spec = self.config.problem.clone();
        if let Some(DataSpec::Libsvm { path, .. }) = &mut spec.data {
            *path = self.resolve(path);
        }
        spec
    }

    /// Checks that need no numerical work: referenced files exist, scaling
    /// constants certify, optimizer parameters are in range.
    pub fn validate(&self) -> CliResult<()> {
        let cfg = &self.config;
        if let Some(DataSpec::Libsvm { path, .. }) = &cfg.problem.data {
            let full = self.resolve(path);
            if !full.is_file() {
                return Err(HatError::Data(format!("dataset {} does not exist", full.display())).into());
            }
        }
        let b = match &cfg.scaling {
            ScalingSpec::Quadratic { b } | ScalingSpec::Entropic { b, .. } => b,
        };
        if let MatrixSpec::RandomSpd { lambda_min, lambda_max, .. } = *b {
            if !(lambda_min > 0.0 && lambda_min <= lambda_max && lambda_max.is_finite()) {
                return Err(HatError::Config(format!(
                    "random-spd needs 0 < lambda_min <= lambda_max, got [{lambda_min}, {lambda_max}]"
                ))
                .into());
            }
            if 2.0 * lambda_min <= lambda_max {
                return Err(HatError::Constants { sigma_v: lambda_min, l_v: lambda_max }.into());
            }
        }
        match &cfg.optimizer {
            OptimizerSpec::Hat(h) => h.validate()?,
            OptimizerSpec::Baseline(b) => b.validate()?,
        }
        Ok(())
    }

    pub fn method_name(&self) -> String {
        if let Some(name) = &self.config.name {
            return name.clone();
        }
        match (&self.config.optimizer, &self.config.estimator) {
            (OptimizerSpec::Hat(_), Some(e)) => format!("hat-{}", estimator_label(e.kind)),
            (OptimizerSpec::Hat(_), None) => "hat".into(),
            (OptimizerSpec::Baseline(b), _) => b.kind.name().into(),
        }
    }

    fn stream_seed(&self, stream: u64) -> u64 {
        derive_seed(self.config.seed, &[stream])
    }

    pub fn build_problem(&self) -> CliResult<Box<dyn Objective>> {
        let spec = &self.config.problem;
        let data = spec.data.as_ref().map(|d| self.load_data(d)).transpose()?;
        let need_data = || {
            data.as_ref()
                .ok_or_else(|| CliError::from(HatError::Config(format!("problem {:?} needs a `data` section", spec.kind))))
        };
        let hidden = || spec.hidden.ok_or_else(|| CliError::from(HatError::Config("tanh problems need `hidden`".into())));
        let model_seed = self.stream_seed(MODEL_STREAM);
        let hide = spec.hide_hessian;
        let mut problem = match spec.kind {
            ProblemKind::LeastSquaresQuadratic => {
                let d = need_data()?;
                boxed(QuadraticProblem::least_squares(d.features.clone(), DenseVector::from_vec(d.labels.clone()))?, hide)
            }
            ProblemKind::Logistic => boxed(make_logistic(need_data()?)?, hide),
            ProblemKind::Nlls => boxed(make_nlls(need_data()?)?, hide),
            ProblemKind::Softmax => boxed(make_softmax_classifier(need_data()?, spec.classes)?, hide),
            ProblemKind::Rosenbrock => {
                if data.is_some() {
                    return Err(HatError::Config("rosenbrock takes no data".into()).into());
                }
                boxed(make_rosenbrock(), hide)
            }
            ProblemKind::TanhLeastSquares => boxed(TanhLeastSquares::new(need_data()?, hidden()?, model_seed)?, hide),
            ProblemKind::TanhSoftmax => boxed(TanhSoftmax::new(need_data()?, hidden()?, spec.classes, model_seed)?, hide),
        };
        if let Some(l2) = spec.l2 {
            if !(l2 >= 0.0 && l2.is_finite()) {
                return Err(HatError::Config(format!("l2 override must be finite and non-negative, got {l2}")).into());
            }
            problem.constants_mut().l2 = l2;
        }
        if let Some(f_star) = spec.f_star {
            problem.constants_mut().f_star = Some(f_star);
        }
        Ok(problem)
    }

    fn load_data(&self, spec: &DataSpec) -> CliResult<LabeledDataset> {
        let seed = self.stream_seed(DATA_STREAM);
        Ok(match spec {
            DataSpec::Libsvm { path, label_map, num_features, truncate, max_rows } => {
                let options = LibsvmOptions {
                    label_map: label_map.clone(),
                    num_features: *num_features,
                    truncate: *truncate,
                    max_rows: *max_rows,
                };
                load_libsvm(self.resolve(path), &options)?
            }
            DataSpec::A9aLike { rows } => synthetic::a9a_like(positive(*rows, "rows")?, seed),
            DataSpec::GaussianBinary { rows, dim } => {
                synthetic::gaussian_binary(positive(*rows, "rows")?, positive(*dim, "dim")?, seed)
            }
            DataSpec::GaussianMulticlass { rows, dim, classes } => synthetic::gaussian_multiclass(
                positive(*rows, "rows")?,
                positive(*dim, "dim")?,
                positive(*classes, "classes")?,
                seed,
            ),
            DataSpec::RandomLeastSquares { rows, dim } => {
                let (a, b) = synthetic::random_least_squares(positive(*rows, "rows")?, positive(*dim, "dim")?, seed);
                LabeledDataset::new(a, b.iter().copied().collect())?
            }
        })
    }

    pub fn start(&self, problem: &dyn Objective) -> CliResult<DenseVector> {
        match &self.config.problem.start {
            None => Ok(problem.default_start()),
            Some(v) if v.len() == problem.dim() => Ok(DenseVector::from_vec(v.clone())),
            Some(v) => Err(HatError::Config(format!(
                "start has length {}, problem dimension is {}",
                v.len(),
                problem.dim()
            ))
            .into()),
        }
    }

    pub fn build_scaling(&self, n: usize) -> CliResult<ScalingFunction> {
        let matrix = |spec: &MatrixSpec| -> CliResult<SymmetricMatrix> {
            Ok(match *spec {
                MatrixSpec::Identity => SymmetricMatrix::identity(n),
                MatrixSpec::RandomSpd { lambda_min, lambda_max, seed } => {
                    let seed = seed.unwrap_or_else(|| self.stream_seed(SCALING_STREAM));
                    random_symmetric_with_spectrum(n, lambda_min, lambda_max, seed)?
                }
            })
        };
        Ok(match &self.config.scaling {
            ScalingSpec::Quadratic { b } => make_quadratic_scaling(matrix(b)?)?,
            ScalingSpec::Entropic { theta, b } => make_entropic_simplex_scaling(matrix(b)?, *theta, n)?,
        })
    }

    pub fn build_estimator(&self) -> CliResult<Box<dyn HessianEstimator>> {
        let spec = self
            .config
            .estimator
            .as_ref()
            .ok_or_else(|| HatError::Config("an `estimator` section is required".into()))?;
        build_estimator(spec, self.stream_seed(ESTIMATOR_STREAM))
    }
}

fn boxed<P: Objective + 'static>(p: P, hide_hessian: bool) -> Box<dyn Objective> {
    if hide_hessian {
        Box::new(WithoutHessian(p))
    } else {
        Box::new(p)
    }
}

fn positive(v: usize, what: &str) -> CliResult<usize> {
    if v == 0 {
        return Err(HatError::Config(format!("{what} must be positive")).into());
    }
    Ok(v)
}

fn estimator_label(kind: EstimatorKind) -> &'static str {
    match kind {
        EstimatorKind::Exact => "exact",
        EstimatorKind::Bfgs => "bfgs",
        EstimatorKind::Sr1 => "sr1",
        EstimatorKind::Dfp => "dfp",
        EstimatorKind::Ggn => "ggn",
        EstimatorKind::Hutchinson => "hutchinson",
    }
}

pub fn build_estimator(spec: &EstimatorSpec, seed: u64) -> CliResult<Box<dyn HessianEstimator>> {
    if spec.ggn.is_some() && spec.kind != EstimatorKind::Ggn {
        return Err(HatError::Config("`ggn` applies to the ggn estimator only".into()).into());
    }
    if spec.probes.is_some() && spec.kind != EstimatorKind::Hutchinson {
        return Err(HatError::Config("`probes` applies to the hutchinson estimator only".into()).into());
    }
    let mut est: Box<dyn HessianEstimator> = match spec.kind {
        EstimatorKind::Exact => Box::new(ExactEstimator),
        EstimatorKind::Bfgs => Box::new(QuasiNewtonEstimator::new(QuasiNewtonKind::Bfgs, None)),
        EstimatorKind::Sr1 => Box::new(QuasiNewtonEstimator::new(QuasiNewtonKind::Sr1, None)),
        EstimatorKind::Dfp => Box::new(QuasiNewtonEstimator::new(QuasiNewtonKind::Dfp, None)),
        EstimatorKind::Ggn => Box::new(GgnEstimator::new(spec.ggn.unwrap_or(GgnKind::Auto))),
        EstimatorKind::Hutchinson => {
            let mode = match spec.probes {
                Some(probes) => ProbeMode::Rademacher { probes },
                None => ProbeMode::Basis,
            };
            Box::new(HutchinsonEstimator::new(mode, derive_seed(seed, &[0]))?)
        }
    };
    if let Some(c) = spec.compression {
        let scheme = match c {
            CompressionSpec::TopK { fraction } => Compression::TopK { fraction },
            CompressionSpec::RandomSparsify { fraction } => {
                Compression::RandomSparsify { fraction, seed: derive_seed(seed, &[1]) }
            }
        };
        est = Box::new(CompressedEstimator::new(est, scheme)?);
    }
    if let Some(period) = spec.lazy_period {
        est = Box::new(LazyEstimator::new(est, period)?);
    }
    Ok(est)
}
