use hat_core::numerics::{min_eigenvalue, operator_norm, DenseVector, SymmetricMatrix};
use hat_core::objectives::synthetic::{a9a_like, gaussian_binary, gaussian_multiclass};
use hat_core::objectives::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn random_point(n: usize, radius: f64, rng: &mut impl Rng) -> DenseVector {
    DVector::from_fn(n, |_, _| rng.random_range(-radius..=radius))
}

fn gradient_error(p: &dyn Objective, x: &DenseVector) -> f64 {
    let g = p.gradient(x);
    (&g - fd_gradient(p, x).unwrap()).norm() / (1.0 + g.norm())
}

fn hessian_error(p: &dyn Objective, x: &DenseVector) -> f64 {
    let h = p.hessian(x).unwrap();
    let fd = fd_hessian(p, x).unwrap();
    let diff = h.add_scaled(&fd, -1.0).unwrap();
    operator_norm(&diff).unwrap() / (1.0 + operator_norm(&h).unwrap())
}

fn shipped_problems() -> Vec<Box<dyn Objective>> {
    let bin = gaussian_binary(20, 5, 3);
    let multi = gaussian_multiclass(15, 3, 3, 4);
    let small_reg = gaussian_binary(12, 2, 5);
    let a = DMatrix::from_fn(8, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
    let b = DVector::from_fn(8, |i, _| i as f64 * 0.25);
    vec![
        Box::new(make_logistic(&bin).unwrap()),
        Box::new(make_nlls(&bin).unwrap()),
        Box::new(make_rosenbrock()),
        Box::new(QuadraticProblem::least_squares(a, b).unwrap()),
        Box::new(make_softmax_classifier(&multi, None).unwrap()),
        Box::new(TanhLeastSquares::new(&small_reg, 3, 1).unwrap()),
        Box::new(TanhSoftmax::new(&multi, 3, None, 2).unwrap()),
    ]
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    let mut rng = hat_core::rng::stream(11, &[]);
    for p in shipped_problems() {
        for _ in 0..100 {
            let x = random_point(p.dim(), 2.0, &mut rng);
            let ge = gradient_error(p.as_ref(), &x);
            assert!(ge <= 1e-4, "{}: gradient error {ge:e}", p.name());
            let he = hessian_error(p.as_ref(), &x);
            assert!(he <= 1e-3, "{}: Hessian error {he:e}", p.name());
        }
    }
}

#[test]
fn recorded_hessian_lipschitz_constants_hold() {
    for p in shipped_problems() {
        let center = DVector::zeros(p.dim());
        let audit = audit_hessian_lipschitz(p.as_ref(), &center, 2.0, 200, 99).unwrap();
        assert!(audit.passed(), "{}: {audit:?}", p.name());
    }
}

#[test]
fn logistic_examples() {
    let data = gaussian_binary(20, 5, 1);
    let p = make_logistic(&data).unwrap();
    let x0 = DVector::zeros(5);
    assert!((p.value(&x0) - 2f64.ln()).abs() < 1e-15);

    let single = LabeledDataset::new(DMatrix::from_element(1, 1, 1.0), vec![1.0]).unwrap();
    let p1 = make_logistic(&single).unwrap();
    assert_eq!(p1.gradient(&DVector::zeros(1))[0], -0.5);

    let x = DVector::from_fn(5, |i, _| 0.3 * i as f64 - 0.5);
    assert!(gradient_error(&p, &x) <= 1e-5);

    let bad = LabeledDataset::new(DMatrix::from_element(1, 1, 1.0), vec![0.0]).unwrap();
    assert!(matches!(make_logistic(&bad), Err(hat_core::HatError::Data(_))));
}

#[test]
fn logistic_hessian_is_psd() {
    let p = make_logistic(&a9a_like(200, 7)).unwrap();
    let mut rng = hat_core::rng::stream(12, &[]);
    for _ in 0..20 {
        let x = random_point(p.dim(), 2.0, &mut rng);
        let h = p.hessian(&x).unwrap();
        let norm = operator_norm(&h).unwrap();
        assert!(min_eigenvalue(&h).unwrap() >= -1e-10 * norm);
    }
}

#[test]
fn logistic_default_l2_formula() {
    let data = gaussian_binary(30, 4, 8);
    let p = make_logistic(&data).unwrap();
    let mean_cube: f64 = data.features.row_iter().map(|r| r.norm().powi(3)).sum::<f64>() / 30.0;
    let expected = mean_cube / (6.0 * 3f64.sqrt());
    assert!((p.constants().l2 - expected).abs() <= 1e-14 * expected);
}

#[test]
fn nlls_examples() {
    let data = gaussian_binary(10, 3, 2);
    let base = make_nlls(&data).unwrap();
    let x = DVector::from_vec(vec![0.4, -0.2, 0.9]);
    let fit = DVector::from_fn(10, |i, _| 1.0 / (1.0 + (-(data.features.row(i) * &x)[0]).exp()));
    let perfect = base.clone().with_targets(fit);
    assert!(perfect.value(&x) < 1e-30);
    assert!(perfect.gradient(&x).norm() < 1e-15);

    let half = base.with_targets(DVector::from_element(10, 0.5));
    assert_eq!(half.value(&DVector::zeros(3)), 0.0);
    assert!(hessian_error(&half, &x) <= 1e-4);
    assert!(!half.constants().convex);
}

#[test]
fn nlls_value_matches_mean_squared_error() {
    let data = gaussian_binary(12, 3, 4);
    let p = make_nlls(&data).unwrap();
    let x = DVector::from_vec(vec![0.1, 0.7, -1.3]);
    let direct: f64 = (0..12)
        .map(|i| {
            let b = if data.labels[i] > 0.0 { 1.0 } else { 0.0 };
            let s = 1.0 / (1.0 + (-(data.features.row(i) * &x)[0]).exp());
            (b - s) * (b - s)
        })
        .sum::<f64>()
        / 12.0;
    assert!((p.value(&x) - direct).abs() < 1e-15);
}

#[test]
fn rosenbrock_examples() {
    let p = make_rosenbrock();
    let one = DVector::from_vec(vec![1.0, 1.0]);
    assert_eq!(p.value(&one), 0.0);
    assert_eq!(p.gradient(&one).norm(), 0.0);
    assert_eq!(p.value(&DVector::zeros(2)), 1.0);
    let start = p.default_start();
    assert!((p.value(&start) - 24.2).abs() < 1e-12);
    assert!(fd_gradient(&p, &one).unwrap().norm() < 1e-6);
    let h = p.hessian(&one).unwrap();
    assert_eq!(h.as_matrix(), &DMatrix::from_row_slice(2, 2, &[802.0, -400.0, -400.0, 200.0]));
    assert_eq!(p.constants().f_star, Some(0.0));
    assert!(p.constants().l2.is_finite() && p.constants().l2 > 0.0);
}

#[test]
fn quadratic_fd_hessian_is_exact() {
    let q = SymmetricMatrix::new(DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 2.0])).unwrap();
    let p = QuadraticProblem::new(q.clone(), DVector::zeros(3)).unwrap();
    let x = DVector::from_vec(vec![0.3, -2.0, 1.1]);
    let fd = fd_hessian(&p, &x).unwrap();
    let err = operator_norm(&fd.add_scaled(&q, -1.0).unwrap()).unwrap();
    assert!(err <= 1e-6 * operator_norm(&q).unwrap());
    assert_eq!(p.constants().f_star, Some(0.0));
}

#[test]
fn least_squares_minimum_recorded() {
    let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let b = DVector::from_vec(vec![1.0, 1.0, 0.0]);
    let p = QuadraticProblem::least_squares(a, b).unwrap();
    // Normal equations [[2,1],[1,2]] x = (1,1) give x = (1/3, 1/3).
    let xs = DVector::from_vec(vec![1.0 / 3.0, 1.0 / 3.0]);
    assert!((p.constants().f_star.unwrap() - p.value(&xs)).abs() < 1e-15);
    assert!(p.gradient(&xs).norm() < 1e-15);
}

#[test]
fn softmax_examples() {
    let data = gaussian_multiclass(9, 2, 3, 5);
    let p = make_softmax_classifier(&data, None).unwrap();
    assert!((p.value(&DVector::zeros(p.dim())) - 9.0 * 3f64.ln()).abs() < 1e-12);

    let one = LabeledDataset::new(DMatrix::from_element(1, 1, 0.0), vec![1.0]).unwrap();
    let p1 = make_softmax_classifier(&one, Some(2)).unwrap();
    // Parameters (w_0, beta_0, w_1, beta_1): the bias gap is the margin.
    let x = DVector::from_vec(vec![0.0, 0.0, 0.0, 20.0]);
    assert!(p1.value(&x) < 1e-6);

    let bad = LabeledDataset::new(DMatrix::from_element(1, 1, 0.0), vec![4.0]).unwrap();
    assert!(matches!(make_softmax_classifier(&bad, Some(3)), Err(hat_core::HatError::Data(_))));
    let x = DVector::from_fn(p.dim(), |i, _| (i as f64 * 0.37).sin());
    assert!(gradient_error(&p, &x) <= 1e-5);
}

#[test]
fn without_hessian_hides_the_oracle() {
    let p = WithoutHessian(make_rosenbrock());
    assert!(!p.has_hessian());
    assert!(matches!(p.hessian(&DVector::zeros(2)), Err(hat_core::HatError::Unsupported(_))));
}

#[test]
fn fd_rejects_non_finite_probes() {
    struct Blowup;
    impl Objective for Blowup {
        fn name(&self) -> &str {
            "blowup"
        }
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &DenseVector) -> f64 {
            if x[0] > 0.0 { f64::NAN } else { x[0] }
        }
        fn gradient(&self, x: &DenseVector) -> DenseVector {
            x.map(|v| if v > 0.0 { f64::INFINITY } else { 1.0 })
        }
        fn constants(&self) -> &ProblemConstants {
            unimplemented!()
        }
        fn constants_mut(&mut self) -> &mut ProblemConstants {
            unimplemented!()
        }
    }
    let x = DVector::zeros(1);
    assert!(matches!(fd_gradient(&Blowup, &x), Err(hat_core::HatError::Numeric { .. })));
    assert!(matches!(fd_hessian(&Blowup, &x), Err(hat_core::HatError::Numeric { .. })));
}

#[test]
fn a9a_like_shape() {
    let data = a9a_like(100, 1);
    assert_eq!((data.num_samples(), data.num_features()), (100, 123));
    assert!(data.labels.iter().all(|&b| b == 1.0 || b == -1.0));
    for row in data.features.row_iter() {
        assert_eq!(row.sum(), 14.0);
    }
    assert_eq!(a9a_like(100, 1), data);
}
