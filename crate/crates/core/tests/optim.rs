use fracopt::optim::*;
use fracopt::rng::Rng;
use fracopt::Result;
use proptest::prelude::*;

fn quadratic(b: Vec<f64>) -> impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)> {
    move |x: &[f64]| {
        let v = 0.5 * x.iter().map(|t| t * t).sum::<f64>() - x.iter().zip(&b).map(|(p, q)| p * q).sum::<f64>();
        Ok((v, x.iter().zip(&b).map(|(p, q)| p - q).collect()))
    }
}

fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (a, b) = (x[0], x[1]);
    let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
    Ok((v, vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]))
}

#[test]
fn quadratic_converges_quickly() {
    let b: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
    let r = bfgs_minimize(quadratic(b.clone()), &[0.0; 10], &BoxConstraints::unbounded(10), &BfgsOptions::with_tol(1e-10, 100))
        .unwrap();
    assert!(r.converged());
    assert!(r.iterations <= 15, "{} iterations", r.iterations);
    assert!(r.x.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-9));
    assert_eq!(r.history.len(), r.iterations);
}

#[test]
fn ill_conditioned_quadratic() {
    let diag: Vec<f64> = (0..10).map(|i| 10f64.powf(i as f64 / 3.0)).collect();
    let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let v = x.iter().zip(&diag).map(|(t, d)| 0.5 * d * (t - 1.0).powi(2)).sum();
        Ok((v, x.iter().zip(&diag).map(|(t, d)| d * (t - 1.0)).collect()))
    };
    let r = bfgs_minimize(f, &[0.0; 10], &BoxConstraints::unbounded(10), &BfgsOptions::with_tol(1e-10, 200)).unwrap();
    assert!(r.converged());
    assert!(r.x.iter().all(|t| (t - 1.0).abs() < 1e-8));
}

#[test]
fn box_active_minimizer_lands_on_face() {
    let b = vec![2.0, -1.0, 0.5];
    let bx = BoxConstraints::uniform(3, 0.0, 1.0).unwrap();
    let r = bfgs_minimize(quadratic(b.clone()), &[0.5; 3], &bx, &BfgsOptions::with_tol(1e-10, 100)).unwrap();
    assert!(r.converged());
    assert!(r.pg_norm <= 1e-10);
    assert_eq!(r.x[0], 1.0);
    assert_eq!(r.x[1], 0.0);
    assert!((r.x[2] - 0.5).abs() < 1e-10);
}

#[test]
fn rosenbrock_from_standard_start() {
    let r = bfgs_minimize(rosenbrock, &[-1.2, 1.0], &BoxConstraints::unbounded(2), &BfgsOptions::with_tol(1e-10, 500)).unwrap();
    assert!(r.value <= 1e-8, "{}", r.value);
    assert!(r.max_asymmetry <= 1e-10);
}

#[test]
fn armijo_and_monotone_objective() {
    let r = bfgs_minimize(rosenbrock, &[-1.2, 1.0], &BoxConstraints::unbounded(2), &BfgsOptions::with_tol(1e-10, 500)).unwrap();
    let mut prev = r.initial_value;
    for rec in &r.history {
        assert!(rec.armijo_slack <= 0.0);
        assert!(rec.value <= prev);
        assert!(rec.backtracks <= 50);
        prev = rec.value;
    }
}

#[test]
fn start_outside_box_is_projected_and_deterministic() {
    let bx = BoxConstraints::uniform(2, -0.5, 0.5).unwrap();
    let a = bfgs_minimize(rosenbrock, &[3.0, -3.0], &bx, &BfgsOptions::with_tol(1e-7, 300)).unwrap();
    let b = bfgs_minimize(rosenbrock, &[3.0, -3.0], &bx, &BfgsOptions::with_tol(1e-7, 300)).unwrap();
    assert_eq!(a, b);
    assert!(a.x.iter().all(|v| (-0.5..=0.5).contains(v)));
    assert!(a.converged(), "{:?} {} {:?}", a.status, a.pg_norm, a.x);
}

#[test]
fn iteration_cap_is_flagged() {
    let r = bfgs_minimize(rosenbrock, &[-1.2, 1.0], &BoxConstraints::unbounded(2), &BfgsOptions::with_tol(1e-14, 3)).unwrap();
    assert_eq!(r.status, Status::MaxIterations);
    assert_eq!(r.iterations, 3);
}

#[test]
fn broken_gradient_reports_line_search_failure() {
    // gradient of the wrong sign: no descent along −g
    let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> { Ok((x[0] * x[0], vec![-2.0 * x[0]])) };
    let r = bfgs_minimize(f, &[1.0], &BoxConstraints::unbounded(1), &BfgsOptions::default()).unwrap();
    assert_eq!(r.status, Status::LineSearchFailed);
    assert_eq!(r.x, vec![1.0]);
}

#[test]
fn projection_examples() {
    let bx = BoxConstraints::uniform(2, 0.0, 1.0).unwrap();
    assert_eq!(project_box(&[-5.0, 5.0], &bx).unwrap(), vec![0.0, 1.0]);
    assert_eq!(project_box(&[0.25, 0.75], &bx).unwrap(), vec![0.25, 0.75]);
    assert!(project_box(&[0.0], &bx).is_err());
    assert!(BoxConstraints::new(vec![1.0], vec![0.0]).is_err());
    let mut r = Rng::new(5);
    for _ in 0..100 {
        let x: Vec<f64> = (0..2).map(|_| 4.0 * r.normal()).collect();
        let p = project_box(&x, &bx).unwrap();
        assert_eq!(project_box(&p, &bx).unwrap(), p);
    }
}

#[test]
fn fd_check_detects_wrong_gradient() {
    let b = vec![1.0, -2.0, 0.5];
    let x = [0.3, 0.1, -0.7];
    assert!(fd_gradient_check(quadratic(b.clone()), &x, 1e-5).unwrap() <= 1e-8);
    let mut q = quadratic(b);
    let wrong = |x: &[f64]| q(x).map(|(v, g)| (v, g.iter().map(|t| 2.0 * t).collect()));
    let e = fd_gradient_check(wrong, &x, 1e-5).unwrap();
    assert!((e - 0.5).abs() < 1e-6, "{e}");
}

#[test]
fn log_csv_has_expected_columns() {
    let dir = std::env::temp_dir().join(format!("fracopt-optim-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let r = bfgs_minimize(rosenbrock, &[-1.2, 1.0], &BoxConstraints::unbounded(2), &BfgsOptions::with_tol(1e-8, 500)).unwrap();
    let p = dir.join("log.csv");
    r.write_log_csv(&p).unwrap();
    let (h, rows) = fracopt::io::read_csv(&p).unwrap();
    assert_eq!(h, vec!["iter", "J", "pg_norm", "step"]);
    assert_eq!(rows.len(), r.iterations);
    std::fs::remove_dir_all(&dir).ok();
}

proptest! {
    #[test]
    fn projection_is_nonexpansive(x in prop::collection::vec(-10.0f64..10.0, 4), y in prop::collection::vec(-10.0f64..10.0, 4)) {
        let bx = BoxConstraints::new(vec![-1.0, 0.0, f64::NEG_INFINITY, 2.0], vec![1.0, f64::INFINITY, 0.0, 2.0]).unwrap();
        let (px, py) = (bx.project(&x), bx.project(&y));
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        prop_assert!(d(&px, &py) <= d(&x, &y) + 1e-15);
        prop_assert_eq!(bx.project(&px), px);
    }

    #[test]
    fn convex_quadratic_in_box_satisfies_kkt(b in prop::collection::vec(-3.0f64..3.0, 5)) {
        let bx = BoxConstraints::uniform(5, -1.0, 1.0).unwrap();
        let r = bfgs_minimize(quadratic(b.clone()), &[0.0; 5], &bx, &BfgsOptions::with_tol(1e-10, 200)).unwrap();
        prop_assert!(r.converged());
        for (x, t) in r.x.iter().zip(&b) {
            prop_assert!((x - t.clamp(-1.0, 1.0)).abs() <= 1e-9);
        }
    }
}
