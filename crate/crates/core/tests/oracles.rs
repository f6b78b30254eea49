//! Checks against values computed once by independent scripted constructions
//! (numpy normal equations, explicit hat matrices, brute-force orthant search,
//! scipy B-splines) and frozen here.

use nalgebra::{DMatrix, DVector};
use scents::estimator::{assemble_system, solve_alpha};
use scents::numerics::{self, LassoConfig};
use scents::{Dataset, SplineBasis};

fn close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "entry {i}: {x} vs {y}");
    }
}

fn ols_fixture() -> (DMatrix<f64>, DVector<f64>) {
    let x = DMatrix::from_fn(20, 3, |i, j| (0.37 * ((i + 1) * (j + 1)) as f64 + 0.11 * j as f64).sin());
    let y = DVector::from_fn(20, |i, _| (0.23 * i as f64).cos() + 0.5 * i as f64 / 20.0);
    (x, y)
}

fn lasso_fixture() -> (DMatrix<f64>, DVector<f64>) {
    let x = DMatrix::from_fn(8, 3, |i, j| (1.1 * i as f64 + 2.3 * j as f64 + 0.5).sin());
    let y = DVector::from_fn(8, |i, _| (0.7 * i as f64).cos() + 0.3 * i as f64 - 1.0);
    (x, y)
}

#[test]
fn ols_matches_normal_equations() {
    let (x, y) = ols_fixture();
    let coef = numerics::ols(&x, &y);
    close(coef.as_slice(), &[0.6800133886087765, 0.06306707880244751, 0.028174767381794242], 1e-8);
}

#[test]
fn ols_identity_and_exact() {
    let coef = numerics::ols(&DMatrix::identity(3, 3), &DVector::from_vec(vec![1.0, 2.0, 3.0]));
    close(coef.as_slice(), &[1.0, 2.0, 3.0], 1e-12);
    let (x, _) = ols_fixture();
    let beta = DVector::from_vec(vec![0.3, -2.0, 1.5]);
    let coef = numerics::ols(&x, &(&x * &beta));
    close(coef.as_slice(), beta.as_slice(), 1e-10);
}

#[test]
fn projection_matches_hat_matrix() {
    let a = DMatrix::from_fn(30, 4, |i, j| (0.19 * ((i + 1) * (j + 2)) as f64).cos());
    let m = DMatrix::from_fn(30, 2, |i, j| (0.41 * (i + 1) as f64 + 1.7 * j as f64).sin() + 0.1 * j as f64);
    let p = numerics::project_out(&a, &m);
    close(
        p.row(0).transpose().as_slice(),
        &[-0.0645525761158236, 1.1965897739419995, 0.9268971365519705, 0.7100746996711017],
        1e-8,
    );
    close(
        p.row(17).transpose().as_slice(),
        &[0.006702581329513985, -0.3819038476634688, 0.6091311268817939, -0.06552878494997616],
        1e-8,
    );
    assert!((p.sum() + 8.484127923499521).abs() < 1e-8);
    assert!((p.norm() - 6.6328000753649015).abs() < 1e-8);
    assert!((m.transpose() * &p).amax() < 1e-8 * a.norm());
}

#[test]
fn projection_edge_cases() {
    let a = DMatrix::from_fn(10, 2, |i, j| (i * 3 + j) as f64);
    assert_eq!(numerics::project_out(&a, &DMatrix::zeros(10, 3)), a);
    assert!(numerics::project_out(&a, &a).amax() < 1e-10 * a.amax());
}

#[test]
fn lasso_matches_orthant_enumeration() {
    let (x, y) = lasso_fixture();
    let cases: [(f64, [f64; 3]); 3] = [
        (0.1, [0.42956312481529724, 0.0, 0.0]),
        (0.05, [0.5165184935515253, -0.011556361071450449, 0.0]),
        (0.02, [0.546112106022274, -0.054441301572384845, 0.0]),
    ];
    for (lambda, expected) in cases {
        let fit = numerics::lasso(&x, &y, &LassoConfig::with_lambda(lambda)).unwrap();
        close(fit.coef.as_slice(), &expected, 1e-6);
        assert!(fit.kkt_residual <= 1e-6);
    }
}

#[test]
fn lasso_zero_at_threshold_and_ols_at_zero() {
    let (x, y) = ols_fixture();
    let lmax = numerics::lambda_max(&x, &y, false);
    let fit = numerics::lasso(&x, &y, &LassoConfig::with_lambda(lmax)).unwrap();
    assert!(fit.coef.iter().all(|c| *c == 0.0));
    assert!(numerics::kkt_residual(&x, &y, &fit.coef, lmax) <= 1e-12);
    let fit = numerics::lasso(&x, &y, &LassoConfig::with_lambda(0.0)).unwrap();
    close(fit.coef.as_slice(), numerics::ols(&x, &y).as_slice(), 1e-6);
}

#[test]
fn kkt_detects_perturbation() {
    let (x, y) = lasso_fixture();
    let fit = numerics::lasso(&x, &y, &LassoConfig::with_lambda(0.05)).unwrap();
    let mut bumped = fit.coef.clone();
    bumped[1] += 0.1;
    assert!(numerics::kkt_residual(&x, &y, &bumped, 0.05) > 1e-3);
}

#[test]
fn spline_midpoint_values() {
    let b = SplineBasis::new(1.0, 2).unwrap();
    close(b.eval_unscaled(0.0).as_slice(), &[0.0, 0.25, 0.5, 0.25, 0.0], 1e-14);
}

#[test]
fn assemble_system_fixture() {
    let d = Dataset::new(
        DVector::from_vec(vec![1.5, -0.2, 2.1, 0.7, -1.3, 0.4]),
        DVector::from_vec(vec![0.3, -0.8, 1.9, -0.1, 0.6, -2.2]),
        DMatrix::from_column_slice(6, 1, &[0.5, -1.0, 0.25, 2.0, -0.4, 1.1]),
        DMatrix::from_column_slice(6, 1, &[0.2, 0.9, -0.7, 0.1, -1.2, 0.8]),
    )
    .unwrap();
    let basis = SplineBasis::new(1.0, 2).unwrap();
    let gamma = DVector::from_vec(vec![0.5]);
    let omega = DVector::from_vec(vec![0.1, -0.3, 0.2, 0.4, -0.1]);
    let sys = assemble_system(&d, &gamma, &omega, &basis).unwrap();
    assert_eq!(sys.n_masked, 2);
    assert_eq!(sys.w.shape(), (8, 3));
    assert_eq!(sys.n_a.shape(), (8, 5));
    let w_rows = [
        [1.0, 0.5, 0.07440000000000001],
        [0.0, 2.0, 0.054356249999999995],
        [0.0, 0.0, -0.2],
        [0.0, 0.0, -0.9],
        [0.0, 0.0, 0.7],
        [0.0, 0.0, -0.1],
        [0.0, 0.0, 1.2],
        [0.0, 0.0, -0.8],
    ];
    for (i, row) in w_rows.iter().enumerate() {
        close(sys.w.row(i).transpose().as_slice(), row, 1e-12);
    }
    close(
        sys.n_a.row(0).transpose().as_slice(),
        &[0.0, 0.12800000000000003, 0.44800000000000006, 0.416, 0.007999999999999998],
        1e-12,
    );
    close(
        sys.n_a.row(1).transpose().as_slice(),
        &[0.0033750000000000013, 0.37346874999999996, 0.4696249999999999, 0.15353124999999998, 0.0],
        1e-12,
    );
    assert_eq!(sys.n_a.rows(2, 6).amax(), 0.0);
    close(sys.resp.as_slice(), &[1.5, 0.7, 0.2, -1.25, 2.25, -0.15, 1.2, -2.6], 1e-12);
}

#[test]
fn solve_alpha_is_frisch_waugh() {
    let n = 40;
    let w = DMatrix::from_fn(n, 3, |i, j| ((i * (j + 2)) as f64 * 0.31).sin() + if j == 0 && i % 3 == 0 { 1.0 } else { 0.0 });
    let na = DMatrix::from_fn(n, 4, |i, j| if i < 25 { ((i + j) as f64 * 0.17).cos() } else { 0.0 });
    let resp = DVector::from_fn(n, |i, _| (i as f64 * 0.07).exp().ln_1p() - 0.3 * (i as f64).sqrt());
    let mut joint = DMatrix::zeros(n, 7);
    joint.columns_mut(0, 3).copy_from(&w);
    joint.columns_mut(3, 4).copy_from(&na);
    let full = numerics::ols(&joint, &resp);
    let solved = solve_alpha(&w, &na, &resp).unwrap();
    close(solved.theta.as_slice(), &full.as_slice()[..3], 1e-8);
    assert_eq!(solved.alpha, solved.theta[0]);
}

#[test]
fn solve_alpha_recovers_noiseless_theta() {
    let n = 30;
    let w = DMatrix::from_fn(n, 3, |i, j| ((i + 1) as f64 * (0.21 + 0.4 * j as f64)).sin());
    let na = DMatrix::from_fn(n, 5, |i, j| if i < 18 { ((i * (j + 1)) as f64 * 0.13).cos() } else { 0.0 });
    let theta0 = DVector::from_vec(vec![1.25, -0.5, 2.0]);
    let omega0 = DVector::from_vec(vec![0.3, 0.1, -0.2, 0.05, 0.7]);
    let resp = &w * &theta0 + &na * &omega0;
    let solved = solve_alpha(&w, &na, &resp).unwrap();
    close(solved.theta.as_slice(), theta0.as_slice(), 1e-8);
}
