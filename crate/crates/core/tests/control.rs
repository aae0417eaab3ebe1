use fracopt::control::*;
use fracopt::optim::*;
use fracopt::rng::Rng;
use nalgebra::DVector;

fn small_exterior(s: f64, lambda: f64, z_true: f64, noise: f64) -> ExteriorControlSpec {
    ExteriorControlSpec { s, lambda, z_true, noise, h: 0.1, ..Default::default() }
}

fn small_state(u_b: f64) -> StateConstrainedSpec {
    StateConstrainedSpec { h: 1.0 / 16.0, u_b, ..Default::default() }
}

#[test]
fn exterior_gradient_matches_finite_differences() {
    let mut rng = Rng::new(3);
    for s in [0.2, 0.6] {
        let prob = ExteriorControlProblem::from_spec(&small_exterior(s, 1e-3, 1.0, 0.02)).unwrap();
        for _ in 0..5 {
            let z: Vec<f64> = (0..prob.n_controls()).map(|_| 2.0 * rng.uniform()).collect();
            let err = fd_gradient_check(|z| prob.objective(z), &z, 1e-4).unwrap();
            assert!(err <= 1e-5, "s={s}: {err:e}");
        }
    }
}

#[test]
fn exterior_zero_data_gives_zero_control() {
    let spec = small_exterior(0.5, 1.0, 0.0, 0.0);
    let prob = ExteriorControlProblem::from_spec(&spec).unwrap();
    let (_, g) = prob.objective(&vec![0.0; prob.n_controls()]).unwrap();
    assert!(g.iter().all(|v| v.abs() <= 1e-10));
    let (_, r) = solve_exterior_control(&spec).unwrap();
    assert!(r.control.iter().all(|&z| z == 0.0));
}

#[test]
fn exterior_inverse_crime_gradient_is_regularization_only() {
    let lambda = 1e-3;
    let prob = ExteriorControlProblem::from_spec(&small_exterior(0.3, lambda, 1.0, 0.0)).unwrap();
    let z = vec![1.0; prob.n_controls()];
    let (value, g) = prob.objective(&z).unwrap();
    let mz = &prob.mass_control * DVector::from_column_slice(&z);
    let reg = mz.clone() * lambda;
    let dev = (DVector::from_column_slice(&g) - &reg).norm();
    assert!(dev <= 1e-8 * reg.norm(), "{dev:e}");
    let reg_value = 0.5 * lambda * mz.dot(&DVector::from_column_slice(&z));
    assert!((value - reg_value).abs() <= 1e-8 * reg_value);
}

#[test]
fn exterior_solution_is_optimal_among_perturbations() {
    let spec = small_exterior(0.3, 1e-3, 1.0, 0.02);
    let (prob, r) = solve_exterior_control(&spec).unwrap();
    assert!(r.optim.converged());
    assert!(r.kkt.pg_norm <= spec.tol);
    assert!(r.kkt.state_res <= 1e-10 && r.kkt.adjoint_res <= 1e-10);
    let best = prob.objective(&r.control).unwrap().0;
    let mut rng = Rng::new(17);
    for _ in 0..20 {
        let zp: Vec<f64> = r.control.iter().map(|z| (z + 0.05 * rng.normal()).max(0.0)).collect();
        assert!(prob.objective(&zp).unwrap().0 >= best);
    }
    // forward and adjoint share one symmetric operator
    let sys = &prob.robin.system;
    assert!((sys - sys.transpose()).amax() <= 1e-12 * sys.amax());
    // the reported state is reproduced by a fresh forward solve
    let u = prob.state(&r.control).unwrap();
    assert!(u.iter().zip(r.state.dofs()).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs())));
}

#[test]
fn exterior_objective_decreases_along_iterates() {
    let (_, r) = solve_exterior_control(&small_exterior(0.5, 1e-6, 1.0, 0.02)).unwrap();
    let mut prev = r.optim.initial_value;
    for rec in &r.optim.history {
        assert!(rec.value <= prev);
        prev = rec.value;
    }
}

#[test]
fn exterior_rejects_bad_sets() {
    let spec = ExteriorControlSpec { hat: (0.0, 0.2), ..small_exterior(0.5, 1e-3, 1.0, 0.0) };
    assert!(ExteriorControlProblem::from_spec(&spec).is_err());
    let spec = ExteriorControlSpec { lambda: -1.0, ..small_exterior(0.5, 1e-3, 1.0, 0.0) };
    assert!(ExteriorControlProblem::from_spec(&spec).is_err());
}

#[test]
fn penalty_closed_forms() {
    let u = [0.1, 0.2, 0.0];
    let (v, d) = my_penalty(&u, &[0.5; 3], &[0.0; 3], 10.0, &[1.0 / 3.0; 3]).unwrap();
    assert_eq!(v, 0.0);
    assert!(d.iter().all(|&x| x == 0.0));
    let ub = [0.5; 4];
    let u: Vec<f64> = ub.iter().map(|b| b + 1.0).collect();
    let (v, _) = my_penalty(&u, &ub, &[0.0; 4], 7.0, &[0.25; 4]).unwrap();
    assert!((v - 3.5).abs() < 1e-14);
    assert!(my_penalty(&u, &ub, &[0.0; 4], 0.0, &[0.25; 4]).is_err());
}

#[test]
fn penalty_gradient_matches_fd_away_from_kink() {
    let mut rng = Rng::new(8);
    let n = 30;
    let gamma = 5.0;
    let ub = vec![0.1; n];
    let mu = vec![0.05; n];
    let w = vec![0.1; n];
    let u: Vec<f64> = loop {
        let u: Vec<f64> = (0..n).map(|_| 0.1 + 0.2 * rng.normal()).collect();
        if u.iter().all(|x| (0.05 + gamma * (x - 0.1)).abs() > 1e-3) {
            break u;
        }
    };
    let err = fd_gradient_check(|x| my_penalty(x, &ub, &mu, gamma, &w), &u, 1e-7).unwrap();
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn state_constrained_gradient_matches_fd_with_kink_exclusion() {
    let prob = StateConstrainedProblem::from_spec(&small_state(0.1)).unwrap();
    let gamma = 10.0;
    let mut rng = Rng::new(12);
    let mut checked = 0;
    while checked < 5 {
        let z: Vec<f64> = (0..prob.n_controls()).map(|_| 1.0 + rng.normal()).collect();
        let u = prob.state(&z);
        if u.iter().zip(&prob.u_b).any(|(a, b)| (gamma * (a - b)).abs() <= 1e-3) {
            continue;
        }
        let err = fd_gradient_check(|z| prob.objective(z, Some(gamma)), &z, 1e-6).unwrap();
        assert!(err <= 1e-5, "{err:e}");
        checked += 1;
    }
}

#[test]
fn infinite_bound_matches_normal_equations() {
    let spec = small_state(f64::INFINITY);
    let prob = StateConstrainedProblem::from_spec(&spec).unwrap();
    let r = prob.solve_level(&vec![0.0; prob.n_controls()], Some(1.0), &BfgsOptions::with_tol(1e-10, 2000)).unwrap();
    let z = prob.unconstrained_minimizer().unwrap();
    let u_opt = prob.state(&r.control);
    let u_ref = prob.state(&z);
    let dev = (&u_opt - &u_ref).amax();
    assert!(dev <= 1e-6, "{dev:e}");
    assert!(r.multiplier.iter().all(|&m| m == 0.0));
    assert_eq!(r.kkt.compl, 0.0);
    assert_eq!(r.violation, 0.0);
}

#[test]
fn gamma_sweep_reduces_violation_and_satisfies_kkt() {
    let spec = StateConstrainedSpec { levels: 8, ..small_state(0.1) };
    let prob = StateConstrainedProblem::from_spec(&spec).unwrap();
    let opts = BfgsOptions::with_tol(spec.tol, spec.max_iter);
    let sweep = prob.solve_schedule(&spec.schedule(), &opts).unwrap();
    assert!(sweep.nonincreasing(), "{:?}", sweep.violations());
    let compl: Vec<f64> = sweep.levels.iter().map(|r| r.kkt.compl).collect();
    assert!(compl[compl.len() - 1] < compl[0]);
    for r in &sweep.levels {
        assert!(r.kkt.state_res <= 10.0 * spec.tol);
        assert!(r.kkt.adjoint_res <= 10.0 * spec.tol);
        assert!(r.kkt.pg_norm <= 10.0 * spec.tol);
        assert!(r.kkt.multiplier_min >= 0.0);
    }
    assert!(sweep.slope().unwrap() < 0.0);
}

#[test]
fn schedule_and_problem_validation() {
    let prob = StateConstrainedProblem::from_spec(&small_state(0.1)).unwrap();
    let opts = BfgsOptions::default();
    assert!(prob.solve_schedule(&[1.0, 1.0], &opts).is_err());
    assert!(prob.solve_schedule(&[], &opts).is_err());
    assert!(StateConstrainedProblem::from_spec(&StateConstrainedSpec { lambda: 0.0, ..small_state(0.1) }).is_err());
    assert!(StateConstrainedProblem::from_spec(&StateConstrainedSpec { control_lo: 1.0, control_hi: 1.0, ..small_state(0.1) }).is_err());
    assert_eq!(small_state(0.1).schedule()[3], 0.1 * 8.0);
}

#[test]
fn result_bundle_files() {
    let dir = std::env::temp_dir().join(format!("fracopt-ctrl-{}", std::process::id()));
    let (_, r) = solve_exterior_control(&small_exterior(0.4, 1e-3, 1.0, 0.02)).unwrap();
    r.write_bundle(&dir).unwrap();
    for f in ["control.csv", "state.csv", "adjoint.csv", "kkt.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let kkt = std::fs::read_to_string(dir.join("kkt.json")).unwrap();
    for key in ["state_res", "adjoint_res", "pg_norm", "compl", "viol"] {
        assert!(kkt.contains(&format!("\"{key}\"")));
    }
    let spec = StateConstrainedSpec { levels: 3, ..small_state(0.1) };
    let prob = StateConstrainedProblem::from_spec(&spec).unwrap();
    let sweep = prob.solve_schedule(&spec.schedule(), &BfgsOptions::with_tol(1e-7, 500)).unwrap();
    sweep.write_csv(&dir.join("gamma_sweep.csv")).unwrap();
    let (h, rows) = fracopt::io::read_csv(&dir.join("gamma_sweep.csv")).unwrap();
    assert_eq!(h[0], "gamma");
    assert_eq!(rows.len(), 3);
    std::fs::remove_dir_all(&dir).ok();
}
