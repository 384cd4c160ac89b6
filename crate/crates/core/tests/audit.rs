use hat_core::audit::{
    delta_study, theory_report, verify_ggn_bounds, DeltaDriver, GgnLoss, Optimum, SectionStatus,
};
use hat_core::baselines::{run_baseline, BaselineConfig, BaselineKind};
use hat_core::bregman::ScalingFunction;
use hat_core::estimators::{ExactEstimator, GgnEstimator, GgnKind, HutchinsonEstimator, ProbeMode};
use hat_core::hat::{run, ConvexityMode, HatConfig};
use hat_core::numerics::DenseVector;
use hat_core::objectives::{
    make_logistic, make_nlls, make_rosenbrock, make_softmax_classifier, synthetic, Objective, QuadraticProblem,
    TanhLeastSquares, TanhSoftmax,
};
use hat_core::trace::{StepClass, TraceFile, Verdict};
use nalgebra::DMatrix;

fn rosenbrock_trace() -> TraceFile {
    let p = make_rosenbrock();
    let cfg = HatConfig::new(0.1, 0.5, 1e-6, 500);
    let s = ScalingFunction::euclidean(2);
    let r = run(&p, &s, &mut ExactEstimator, &cfg, &p.default_start()).unwrap();
    r.to_trace_file("hat-exact", &p, &s, &cfg, serde_json::Value::Null)
}

#[test]
fn clean_run_passes_every_section() {
    let report = theory_report(&rosenbrock_trace());
    assert!(report.passed, "{}", report.to_text());
    for name in ["monotonicity", "recomputation", "disjunction", "schedule-identity", "kkt", "set-size"] {
        assert_eq!(report.section(name).unwrap().status, SectionStatus::Pass, "{name}");
    }
    assert_eq!(report.section("convex-conditions").unwrap().status, SectionStatus::Skipped);
}

#[test]
fn injected_violation_fails_only_the_disjunction() {
    let mut trace = rosenbrock_trace();
    trace.records[7].step_class = StepClass::Violation;
    let report = theory_report(&trace);
    assert!(!report.passed);
    for s in &report.sections {
        if s.name == "disjunction" {
            assert_eq!(s.status, SectionStatus::Fail);
            assert_eq!(s.failures, vec![7]);
        } else {
            assert_ne!(s.status, SectionStatus::Fail, "{}", s.name);
        }
    }
}

#[test]
fn corrupted_derived_column_is_caught() {
    let mut trace = rosenbrock_trace();
    trace.records[3].a_k *= 1.0 + 1e-9;
    let report = theory_report(&trace);
    assert_eq!(report.section("schedule-identity").unwrap().failures, vec![3]);
}

#[test]
fn empty_trace_is_a_vacuous_pass() {
    let p = QuadraticProblem::new(hat_core::SymmetricMatrix::identity(2), DenseVector::zeros(2)).unwrap();
    let cfg = HatConfig::new(0.1, 0.5, 1e-8, 10);
    let s = ScalingFunction::euclidean(2);
    let r = run(&p, &s, &mut ExactEstimator, &cfg, &DenseVector::zeros(2)).unwrap();
    let report = theory_report(&r.to_trace_file("hat-exact", &p, &s, &cfg, serde_json::Value::Null));
    assert!(report.passed, "{}", report.to_text());
    assert_eq!(report.iterations, 0);
}

#[test]
fn convex_trace_reports_convex_sections() {
    let data = synthetic::gaussian_binary(100, 5, 8);
    let p = make_logistic(&data).unwrap();
    let newton = run_baseline(&p, &BaselineConfig::new(BaselineKind::DampedNewton, 1e-12, 100), &p.default_start())
        .unwrap();
    let mut cfg = HatConfig::new(0.1, 0.6, 1e-6, 1000);
    cfg.convexity = ConvexityMode::Convex { f_star: newton.final_f };
    let s = ScalingFunction::euclidean(p.dim());
    let r = run(&p, &s, &mut ExactEstimator, &cfg, &p.default_start()).unwrap();
    let report = theory_report(&r.to_trace_file("hat-exact", &p, &s, &cfg, serde_json::Value::Null));
    assert!(report.passed, "{}", report.to_text());
    assert_eq!(report.section("convex-conditions").unwrap().status, SectionStatus::Pass);
    assert!(report.section("set-size").unwrap().summary.contains("convex |F| bound"));
}

#[test]
fn baseline_trace_checks_monotonicity_only() {
    let p = make_rosenbrock();
    let cfg = BaselineConfig::new(BaselineKind::GdBacktracking, 1e-6, 50);
    let r = run_baseline(&p, &cfg, &p.default_start()).unwrap();
    let report = theory_report(&r.to_trace_file(&p, &cfg, serde_json::Value::Null));
    assert!(report.passed);
    assert_eq!(report.section("monotonicity").unwrap().status, SectionStatus::Pass);
    assert_eq!(report.section("disjunction").unwrap().status, SectionStatus::Skipped);
}

#[test]
fn exact_estimator_delta_is_identically_zero() {
    let p = make_rosenbrock();
    let driver = DeltaDriver::Baseline(BaselineConfig::new(BaselineKind::GdBacktracking, 1e-8, 0));
    let series = delta_study(&p, &mut ExactEstimator, &driver, 40, &p.default_start()).unwrap();
    assert_eq!(series.rows.len(), 40);
    assert!(series.rows.iter().all(|r| r.delta == 0.0 && r.deviation_true == 0.0));
    assert_eq!(series.sup_delta, 0.0);
}

#[test]
fn hutchinson_delta_is_finite_and_recomputable() {
    let data = synthetic::a9a_like(200, 3);
    let p = make_logistic(&data).unwrap();
    let mut est = HutchinsonEstimator::new(ProbeMode::Rademacher { probes: 8 }, 5).unwrap();
    let driver = DeltaDriver::Baseline(BaselineConfig::new(BaselineKind::GdBacktracking, 1e-10, 0));
    let series = delta_study(&p, &mut est, &driver, 60, &p.default_start()).unwrap();
    assert_eq!(series.rows.len(), 60);
    assert!(series.sup_delta.is_finite() && series.sup_delta > 0.0);
    assert!(series.recomputation_error() <= 1e-12);
    let csv = series.csv_string();
    assert_eq!(csv.lines().count(), 61);
    assert!(csv.starts_with(hat_core::audit::DELTA_CSV_COLUMNS));
}

#[test]
fn ggn_delta_under_hat_respects_the_gauss_newton_bound() {
    // Zero-residual sigmoid least squares: targets generated by a planted x*.
    let data = synthetic::gaussian_binary(80, 4, 12);
    let base = make_nlls(&data).unwrap();
    let x_star = DenseVector::from_vec(vec![0.8, -0.5, 0.3, 0.1]);
    let targets = base.design_matrix() * &x_star;
    let targets = targets.map(|t| 1.0 / (1.0 + (-t).exp()));
    let p = base.with_targets(targets);
    let l = p.constants().component_lipschitz.unwrap();
    let n = data.num_samples() as f64;
    let driver = DeltaDriver::Hat { scaling: ScalingFunction::euclidean(4), config: HatConfig::new(0.1, 0.5, 1e-9, 0) };
    let mut est = GgnEstimator::new(GgnKind::LeastSquares);
    let series = delta_study(&p, &mut est, &driver, 200, &p.default_start()).unwrap();
    assert!(!series.rows.is_empty());
    for r in &series.rows {
        // ||hess f - H|| <= L sqrt(2 N f(x_k)), divided by sqrt(||g_k||).
        let bound = l * (2.0 * n * r.f).sqrt() / r.grad_norm.sqrt();
        assert!(r.delta <= bound + 1e-9, "k {}: {} > {}", r.k, r.delta, bound);
    }
}

#[test]
fn linear_least_squares_has_zero_ggn_gap() {
    let a = DMatrix::from_fn(12, 4, |i, j| ((i * 4 + j) as f64).sin());
    let b = DenseVector::from_fn(12, |i, _| i as f64 * 0.1);
    let p = QuadraticProblem::least_squares(a, b).unwrap();
    let report = verify_ggn_bounds(&p, &DenseVector::zeros(4), 2.0, 20, 1, None).unwrap();
    assert_eq!(report.loss, GgnLoss::LeastSquares);
    assert!(report.max_lhs <= 1e-9);
    assert!(report.passed());
}

#[test]
fn zero_residual_point_has_both_sides_zero() {
    let data = synthetic::gaussian_binary(40, 3, 2);
    let base = make_nlls(&data).unwrap();
    let x_star = DenseVector::from_vec(vec![0.2, -0.4, 0.6]);
    let t = (base.design_matrix() * &x_star).map(|t| 1.0 / (1.0 + (-t).exp()));
    let p = base.with_targets(t);
    let report = verify_ggn_bounds(&p, &x_star, 0.0, 1, 0, None).unwrap();
    assert!(report.points[0].lhs <= 1e-9);
    assert!(report.points[0].base_rhs <= 1e-9);
}

#[test]
fn nonlinear_bounds_hold_on_random_points() {
    let data = synthetic::gaussian_binary(30, 3, 7);
    let nlls = make_nlls(&data).unwrap();
    let report = verify_ggn_bounds(&nlls, &DenseVector::zeros(3), 2.0, 200, 3, None).unwrap();
    assert!(report.passed() && report.max_lhs > 0.0);

    let tanh = TanhLeastSquares::new(&data, 3, 4).unwrap();
    let center = DenseVector::zeros(tanh.dim());
    let report = verify_ggn_bounds(&tanh, &center, 1.0, 200, 5, None).unwrap();
    assert!(report.passed(), "{:?}", report.base_failures);

    let multi = synthetic::gaussian_multiclass(30, 3, 3, 9);
    let tsm = TanhSoftmax::new(&multi, 3, None, 6).unwrap();
    let center = DenseVector::zeros(tsm.dim());
    let report = verify_ggn_bounds(&tsm, &center, 1.0, 200, 7, None).unwrap();
    assert_eq!(report.loss, GgnLoss::Softmax);
    assert!(report.passed(), "{:?}", report.base_failures);

    let affine = make_softmax_classifier(&multi, None).unwrap();
    let center = DenseVector::zeros(affine.dim());
    let report = verify_ggn_bounds(&affine, &center, 2.0, 200, 8, None).unwrap();
    assert!(report.passed() && report.max_lhs <= 1e-9);
}

#[test]
fn star_convex_variant_with_newton_minimizer() {
    let data = synthetic::gaussian_multiclass(40, 3, 3, 10);
    let p = make_softmax_classifier(&data, None).unwrap();
    let newton = run_baseline(&p, &BaselineConfig::new(BaselineKind::DampedNewton, 1e-12, 200), &p.default_start())
        .unwrap();
    let report = if newton.verdict == Verdict::Converged {
        let opt = Optimum { f: newton.final_f, x: newton.final_x.clone() };
        verify_ggn_bounds(&p, &opt.x, 1.0, 50, 2, Some(&opt)).unwrap()
    } else {
        verify_ggn_bounds(&p, &p.default_start(), 1.0, 50, 2, None).unwrap()
    };
    assert!(report.passed());
    assert!(report.variants_hold());
}

#[test]
fn unsupported_structures_are_rejected() {
    let p = make_rosenbrock();
    assert!(verify_ggn_bounds(&p, &p.default_start(), 1.0, 5, 0, None).is_ok());
    let q = QuadraticProblem::new(hat_core::SymmetricMatrix::identity(2), DenseVector::zeros(2)).unwrap();
    assert!(matches!(
        verify_ggn_bounds(&q, &DenseVector::zeros(2), 1.0, 5, 0, None),
        Err(hat_core::HatError::Unsupported(_))
    ));
}
