//! Optimal control drivers: exterior control through the Robin
//! approximation, and distributed control with Moreau–Yosida-penalized
//! state constraints. Both reduce to `optim::bfgs_minimize` with discrete
//! adjoint gradients.

use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::fraclap1d::{
    assemble_stiffness, fit_slope, mass_matrix, DiscreteField, Grid1D, NonlocalMatrix, RobinConfig,
    RobinOperator,
};
use crate::optim::{bfgs_minimize, projected_gradient_norm, BfgsOptions, BoxConstraints, OptimResult};
use crate::rng::Rng;
use crate::{io, Error, FracOrder, Result};

/// Residual summary written as `kkt.json`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// relative residual of the state equation at the returned control
    pub state_res: f64,
    /// relative residual of the adjoint equation
    pub adjoint_res: f64,
    /// `‖z − P(z − ∇j)‖`
    pub pg_norm: f64,
    /// complementarity defect
    pub compl: f64,
    /// constraint violation
    pub viol: f64,
    /// most negative multiplier entry (0 when the sign condition holds)
    pub multiplier_min: f64,
}

impl KktReport {
    pub fn to_json(&self) -> String {
        io::json_object(&[
            ("state_res", self.state_res),
            ("adjoint_res", self.adjoint_res),
            ("pg_norm", self.pg_norm),
            ("compl", self.compl),
            ("viol", self.viol),
        ])
    }
}

#[derive(Debug, Clone)]
pub struct ControlResult {
    /// control values on the control nodes
    pub control: Vec<f64>,
    /// coordinates of the control nodes
    pub control_x: Vec<f64>,
    pub state: DiscreteField,
    pub adjoint: DiscreteField,
    pub objective: f64,
    pub optim: OptimResult,
    pub kkt: KktReport,
    /// `‖(ū − u_b)₊‖` (0 for the exterior problem)
    pub violation: f64,
    /// Moreau–Yosida multiplier proxy on the control nodes (empty when unused)
    pub multiplier: Vec<f64>,
    pub gamma: Option<f64>,
}

impl ControlResult {
    /// Writes `control.csv`, `state.csv`, `adjoint.csv` and `kkt.json`.
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let rows: Vec<Vec<f64>> =
            self.control_x.iter().zip(&self.control).map(|(x, z)| vec![*x, *z]).collect();
        io::write_csv(&dir.join("control.csv"), &["x", "z"], &rows)?;
        self.state.write_csv(&dir.join("state.csv"))?;
        self.adjoint.write_csv(&dir.join("adjoint.csv"))?;
        std::fs::write(dir.join("kkt.json"), self.kkt.to_json())?;
        self.optim.write_log_csv(&dir.join("optim_log.csv"))?;
        Ok(())
    }
}

fn rel_residual(res: &DVector<f64>, rhs: &DVector<f64>) -> f64 {
    res.norm() / rhs.norm().max(f64::MIN_POSITIVE)
}

fn sub_matrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

// ---------------------------------------------------------------------------
// Exterior control

/// Geometry and parameters of an exterior-control run with synthetic data.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorControlSpec {
    pub a: f64,
    pub b: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub h: f64,
    /// control support Ω̂ = (lo, hi), a union of exterior elements
    pub hat: (f64, f64),
    pub s: f64,
    pub n: f64,
    pub kappa: f64,
    pub lambda: f64,
    /// value of the data-generating control on Ω̂
    pub z_true: f64,
    pub noise: f64,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ExteriorControlSpec {
    fn default() -> Self {
        ExteriorControlSpec {
            a: -0.4,
            b: 0.4,
            big_a: -1.5,
            big_b: 1.5,
            h: 0.05,
            hat: (0.6, 1.0),
            s: 0.1,
            n: 1e5,
            kappa: 1.0,
            lambda: 1e-8,
            z_true: 1.0,
            noise: 0.02,
            seed: 42,
            tol: 1e-7,
            max_iter: 500,
        }
    }
}

/// Exterior control problem
/// `min ½‖u − u_d‖²_{L²(Ω)} + (λ/2)‖z‖²_{L²(Ω̂)}` subject to the Robin
/// state equation `(R + n M_κ) u = F + n M_κ z` and `z ≥ 0` on Ω̂.
#[derive(Debug, Clone)]
pub struct ExteriorControlProblem {
    pub grid: Grid1D,
    pub s: f64,
    pub lambda: f64,
    pub robin: RobinOperator,
    /// unknown indices of the control nodes
    pub control_dofs: Vec<usize>,
    /// Gram matrix of the control hats
    pub mass_control: DMatrix<f64>,
    /// consistent mass over Ω on all unknowns
    pub mass_omega: DMatrix<f64>,
    /// target on all unknowns (only the Ω part enters)
    pub u_d: DVector<f64>,
    /// load `⟨f, φ_i⟩_Ω`
    pub load: DVector<f64>,
    /// `n M_κ` restricted to the control columns
    coupling: DMatrix<f64>,
}

impl ExteriorControlProblem {
    /// `u_d` is sampled at the closed-domain nodes `ia..=ib`.
    pub fn new(
        mat: &NonlocalMatrix,
        robin: &RobinConfig,
        lambda: f64,
        hat: (f64, f64),
        u_d: &[f64],
        load: &[f64],
    ) -> Result<Self> {
        let grid = mat.grid.clone();
        if !(lambda >= 0.0) {
            return Err(Error::Invalid(format!("lambda must be nonnegative, got {lambda}")));
        }
        if u_d.len() != grid.ib - grid.ia + 1 {
            return Err(Error::DimensionMismatch { expected: grid.ib - grid.ia + 1, got: u_d.len() });
        }
        if load.len() != grid.n_dof() {
            return Err(Error::DimensionMismatch { expected: grid.n_dof(), got: load.len() });
        }
        let elements: Vec<usize> = grid
            .exterior_elements()
            .into_iter()
            .filter(|&e| grid.x(e) >= hat.0 - 1e-12 * grid.h && grid.x(e + 1) <= hat.1 + 1e-12 * grid.h)
            .collect();
        if elements.is_empty() {
            return Err(Error::Invalid(format!("control set ({}, {}) contains no exterior element", hat.0, hat.1)));
        }
        let mut nodes: Vec<usize> = elements.iter().flat_map(|&e| [e, e + 1]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.iter().any(|&i| i == 0 || i == grid.m) {
            return Err(Error::Invalid("control set must stay inside the collar".into()));
        }
        let control_dofs: Vec<usize> = nodes.iter().map(|i| i - 1).collect();
        let op = RobinOperator::new(mat, robin)?;
        let mass_all = mass_matrix(&grid, 0..grid.m);
        let mass_control = sub_matrix(&mass_all, &control_dofs);
        let mass_omega = mass_matrix(&grid, grid.omega_elements());
        let mut ud = DVector::zeros(grid.n_dof());
        for (k, node) in (grid.ia..=grid.ib).enumerate() {
            ud[node - 1] = u_d[k];
        }
        let coupling = DMatrix::from_fn(grid.n_dof(), control_dofs.len(), |i, j| {
            op.n * op.mass_kappa[(i, control_dofs[j])]
        });
        Ok(ExteriorControlProblem {
            s: mat.s.get(),
            grid,
            lambda,
            robin: op,
            control_dofs,
            mass_control,
            mass_omega,
            u_d: ud,
            load: DVector::from_column_slice(load),
            coupling,
        })
    }

    /// Builds the problem with synthetic data `u_d = u(z_true) + noise` on
    /// the nodes of Ω̄ and zero source.
    pub fn from_spec(spec: &ExteriorControlSpec) -> Result<Self> {
        let grid = Grid1D::new(spec.a, spec.b, spec.big_a, spec.big_b, spec.h)?;
        let mat = assemble_stiffness(&grid, FracOrder::new(spec.s)?)?;
        let robin = RobinConfig::uniform(&grid, spec.n, spec.kappa);
        let zeros = vec![0.0; grid.ib - grid.ia + 1];
        let load = vec![0.0; grid.n_dof()];
        let mut prob = Self::new(&mat, &robin, spec.lambda, spec.hat, &zeros, &load)?;
        let z = vec![spec.z_true; prob.n_controls()];
        let u = prob.state(&z)?;
        let mut rng = Rng::new(spec.seed);
        for node in grid.ia..=grid.ib {
            prob.u_d[node - 1] = u[node - 1] + spec.noise * rng.normal();
        }
        Ok(prob)
    }

    pub fn n_controls(&self) -> usize {
        self.control_dofs.len()
    }

    pub fn control_x(&self) -> Vec<f64> {
        self.control_dofs.iter().map(|&d| self.grid.x(d + 1)).collect()
    }

    fn state_rhs(&self, z: &[f64]) -> DVector<f64> {
        &self.load + &self.coupling * DVector::from_column_slice(z)
    }

    /// Robin state on all unknowns for the control `z`.
    pub fn state(&self, z: &[f64]) -> Result<DVector<f64>> {
        if z.len() != self.n_controls() {
            return Err(Error::DimensionMismatch { expected: self.n_controls(), got: z.len() });
        }
        Ok(self.robin.solve_raw(&self.state_rhs(z)))
    }

    /// Adjoint `(R + n M_κ) p = M_Ω (u − u_d)`; the system is symmetric so
    /// the forward factorization is reused.
    pub fn adjoint(&self, u: &DVector<f64>) -> DVector<f64> {
        self.robin.solve_raw(&(&self.mass_omega * (u - &self.u_d)))
    }

    /// Reduced objective and gradient
    /// `∇j = λ M_Ω̂ z + n (M_κ p)|_Ω̂`.
    pub fn objective(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        let u = self.state(z)?;
        let e = &u - &self.u_d;
        let zv = DVector::from_column_slice(z);
        let mz = &self.mass_control * &zv;
        let value = 0.5 * e.dot(&(&self.mass_omega * &e)) + 0.5 * self.lambda * zv.dot(&mz);
        let p = self.adjoint(&u);
        let grad = self.coupling.transpose() * p + mz * self.lambda;
        Ok((value, grad.as_slice().to_vec()))
    }

    pub fn solve(&self, z0: &[f64], opts: &BfgsOptions) -> Result<ControlResult> {
        let bx = BoxConstraints::nonnegative(self.n_controls());
        let res = bfgs_minimize(|z| self.objective(z), z0, &bx, opts)?;
        self.finish(res, &bx)
    }

    fn finish(&self, res: OptimResult, bx: &BoxConstraints) -> Result<ControlResult> {
        let z = res.x.clone();
        let rhs = self.state_rhs(&z);
        let u = self.robin.solve_raw(&rhs);
        let state_res = rel_residual(&(&self.robin.system * &u - &rhs), &rhs);
        let arhs = &self.mass_omega * (&u - &self.u_d);
        let p = self.robin.solve_raw(&arhs);
        let adjoint_res = rel_residual(&(&self.robin.system * &p - &arhs), &arhs);
        let (_, g) = self.objective(&z)?;
        let pg = projected_gradient_norm(&z, &g, bx);
        let compl = z.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().abs();
        let multiplier_min = g.iter().zip(&z).filter(|(_, zi)| **zi == 0.0).fold(0.0f64, |m, (gi, _)| m.min(*gi));
        let kkt = KktReport { state_res, adjoint_res, pg_norm: pg, compl, viol: 0.0, multiplier_min };
        Ok(ControlResult {
            control_x: self.control_x(),
            control: z,
            state: DiscreteField::from_dofs(&self.grid, u.as_slice()),
            adjoint: DiscreteField::from_dofs(&self.grid, p.as_slice()),
            objective: res.value,
            optim: res,
            kkt,
            violation: 0.0,
            multiplier: Vec::new(),
            gamma: None,
        })
    }
}

/// Runs the synthetic exterior-control experiment from `z = 0`.
pub fn solve_exterior_control(spec: &ExteriorControlSpec) -> Result<(ExteriorControlProblem, ControlResult)> {
    let prob = ExteriorControlProblem::from_spec(spec)?;
    let z0 = vec![0.0; prob.n_controls()];
    let res = prob.solve(&z0, &BfgsOptions::with_tol(spec.tol, spec.max_iter))?;
    Ok((prob, res))
}

// ---------------------------------------------------------------------------
// State constraints

/// `(1/2γ) Σ w_i (μ̂_i + γ(u_i − u_b,i))₊²` and its gradient
/// `w_i (μ̂_i + γ(u_i − u_b,i))₊`; `weights` are quadrature weights.
pub fn my_penalty(u: &[f64], u_b: &[f64], mu_hat: &[f64], gamma: f64, weights: &[f64]) -> Result<(f64, Vec<f64>)> {
    if !(gamma > 0.0) {
        return Err(Error::Invalid(format!("gamma must be positive, got {gamma}")));
    }
    let n = u.len();
    for len in [u_b.len(), mu_hat.len(), weights.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        let t = (mu_hat[i] + gamma * (u[i] - u_b[i])).max(0.0);
        value += weights[i] * t * t;
        grad.push(weights[i] * t);
    }
    Ok((value / (2.0 * gamma), grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateConstrainedSpec {
    pub a: f64,
    pub b: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub h: f64,
    pub s: f64,
    pub lambda: f64,
    /// radius of the torsion-shaped target `u_d = c_s (r² − x²)₊ˢ`
    pub target_radius: f64,
    pub target_scale: f64,
    pub u_b: f64,
    pub mu_hat: f64,
    pub control_lo: f64,
    pub control_hi: f64,
    pub gamma0: f64,
    pub levels: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StateConstrainedSpec {
    fn default() -> Self {
        StateConstrainedSpec {
            a: -1.0,
            b: 1.0,
            big_a: -1.5,
            big_b: 1.5,
            h: 1.0 / 32.0,
            s: 0.4,
            lambda: 1e-4,
            target_radius: 0.5,
            target_scale: 1.0,
            u_b: 0.1,
            mu_hat: 0.0,
            control_lo: -100.0,
            control_hi: 100.0,
            gamma0: 0.1,
            levels: 15,
            tol: 1e-8,
            max_iter: 2000,
        }
    }
}

impl StateConstrainedSpec {
    pub fn schedule(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.gamma0 * 2f64.powi(k as i32)).collect()
    }
}

/// Distributed control `min ½‖u − u_d‖² + (λ/2)‖z‖² + MY penalty` with the
/// homogeneous-exterior Dirichlet state equation `A_II u = M z` and
/// `a ≤ z ≤ b`. Controls are sampled at the nodes of Ω.
#[derive(Debug, Clone)]
pub struct StateConstrainedProblem {
    pub grid: Grid1D,
    pub s: f64,
    pub lambda: f64,
    pub u_d: Vec<f64>,
    pub u_b: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub bounds: BoxConstraints,
    /// lumped weights of the interior nodes
    pub weights: Vec<f64>,
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl StateConstrainedProblem {
    pub fn new(
        mat: &NonlocalMatrix,
        lambda: f64,
        u_d: Vec<f64>,
        u_b: Vec<f64>,
        mu_hat: Vec<f64>,
        bounds: BoxConstraints,
    ) -> Result<Self> {
        let grid = mat.grid.clone();
        let n = mat.interior().len();
        for len in [u_d.len(), u_b.len(), mu_hat.len(), bounds.dim()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        if !(lambda > 0.0) {
            return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
        }
        if mu_hat.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::Invalid("shift mu_hat must be nonnegative".into()));
        }
        if bounds.lower.iter().zip(&bounds.upper).any(|(l, u)| !(l < u)) {
            return Err(Error::Invalid("control bounds need a < b".into()));
        }
        let stiffness = mat.a_ii();
        let mass = sub_matrix(&mass_matrix(&grid, grid.omega_elements()), mat.interior());
        let chol = stiffness
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Solver("interior stiffness is not positive definite".into()))?;
        Ok(StateConstrainedProblem {
            s: mat.s.get(),
            weights: vec![grid.h; n],
            grid,
            lambda,
            u_d,
            u_b,
            mu_hat,
            bounds,
            stiffness,
            mass,
            chol,
        })
    }

    pub fn from_spec(spec: &StateConstrainedSpec) -> Result<Self> {
        let grid = Grid1D::new(spec.a, spec.b, spec.big_a, spec.big_b, spec.h)?;
        let mat = assemble_stiffness(&grid, FracOrder::new(spec.s)?)?;
        let xs: Vec<f64> = grid.interior_nodes().iter().map(|&i| grid.x(i)).collect();
        let u_d = xs
            .iter()
            .map(|&x| spec.target_scale * crate::fraclap1d::torsion_exact(spec.s, spec.target_radius, x))
            .collect();
        let n = xs.len();
        let bounds = BoxConstraints::uniform(n, spec.control_lo, spec.control_hi)?;
        Self::new(&mat, spec.lambda, u_d, vec![spec.u_b; n], vec![spec.mu_hat; n], bounds)
    }

    pub fn n_controls(&self) -> usize {
        self.u_d.len()
    }

    pub fn nodes_x(&self) -> Vec<f64> {
        self.grid.interior_nodes().iter().map(|&i| self.grid.x(i)).collect()
    }

    pub fn state(&self, z: &[f64]) -> DVector<f64> {
        self.chol.solve(&(&self.mass * DVector::from_column_slice(z)))
    }

    fn adjoint_rhs(&self, u: &DVector<f64>, gamma: Option<f64>) -> Result<DVector<f64>> {
        let e = u - DVector::from_column_slice(&self.u_d);
        let mut rhs = &self.mass * e;
        if let Some(g) = gamma {
            let (_, d) = my_penalty(u.as_slice(), &self.u_b, &self.mu_hat, g, &self.weights)?;
            rhs += DVector::from_vec(d);
        }
        Ok(rhs)
    }

    /// Reduced objective; `gamma = None` drops the penalty.
    pub fn objective(&self, z: &[f64], gamma: Option<f64>) -> Result<(f64, Vec<f64>)> {
        if z.len() != self.n_controls() {
            return Err(Error::DimensionMismatch { expected: self.n_controls(), got: z.len() });
        }
        let zv = DVector::from_column_slice(z);
        let u = self.state(z);
        let e = &u - DVector::from_column_slice(&self.u_d);
        let mz = &self.mass * &zv;
        let mut value = 0.5 * e.dot(&(&self.mass * &e)) + 0.5 * self.lambda * zv.dot(&mz);
        if let Some(g) = gamma {
            value += my_penalty(u.as_slice(), &self.u_b, &self.mu_hat, g, &self.weights)?.0;
        }
        let p = self.chol.solve(&self.adjoint_rhs(&u, gamma)?);
        let grad = &self.mass * (p + zv * self.lambda);
        Ok((value, grad.as_slice().to_vec()))
    }

    /// `‖(u − u_b)₊‖` with the lumped weights.
    pub fn violation(&self, u: &[f64]) -> f64 {
        u.iter()
            .zip(&self.u_b)
            .zip(&self.weights)
            .map(|((ui, bi), w)| w * (ui - bi).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Minimizes the penalized objective for one γ.
    pub fn solve_level(&self, z0: &[f64], gamma: Option<f64>, opts: &BfgsOptions) -> Result<ControlResult> {
        let res = bfgs_minimize(|z| self.objective(z, gamma), z0, &self.bounds, opts)?;
        self.finish(res, gamma)
    }

    fn finish(&self, res: OptimResult, gamma: Option<f64>) -> Result<ControlResult> {
        let z = res.x.clone();
        let zv = DVector::from_column_slice(&z);
        let rhs = &self.mass * &zv;
        let u = self.chol.solve(&rhs);
        let state_res = rel_residual(&(&self.stiffness * &u - &rhs), &rhs);
        let arhs = self.adjoint_rhs(&u, gamma)?;
        let p = self.chol.solve(&arhs);
        let adjoint_res = rel_residual(&(&self.stiffness * &p - &arhs), &arhs);
        let pg = projected_gradient_norm(&z, &res.grad, &self.bounds);
        let multiplier: Vec<f64> = match gamma {
            Some(g) => (0..u.len()).map(|i| (self.mu_hat[i] + g * (u[i] - self.u_b[i])).max(0.0)).collect(),
            None => vec![0.0; u.len()],
        };
        let compl = (0..u.len())
            .filter(|&i| multiplier[i] > 0.0)
            .map(|i| self.weights[i] * multiplier[i] * (self.u_b[i] - u[i]))
            .sum::<f64>()
            .abs();
        let viol = self.violation(u.as_slice());
        let multiplier_min = multiplier.iter().fold(0.0f64, |m, v| m.min(*v));
        let kkt = KktReport { state_res, adjoint_res, pg_norm: pg, compl, viol, multiplier_min };
        let mut state = DiscreteField::zeros(&self.grid);
        let mut adjoint = DiscreteField::zeros(&self.grid);
        for (k, node) in self.grid.interior_nodes().into_iter().enumerate() {
            state.values[node] = u[k];
            adjoint.values[node] = p[k];
        }
        Ok(ControlResult {
            control_x: self.nodes_x(),
            control: z,
            state,
            adjoint,
            objective: res.value,
            optim: res,
            kkt,
            violation: viol,
            multiplier,
            gamma,
        })
    }

    /// Continuation over the γ schedule with warm starts.
    pub fn solve_schedule(&self, gammas: &[f64], opts: &BfgsOptions) -> Result<GammaSweep> {
        if gammas.is_empty() || gammas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("gamma schedule must be nonempty and strictly increasing".into()));
        }
        let mut z = vec![0.0; self.n_controls()];
        let mut levels = Vec::with_capacity(gammas.len());
        for &g in gammas {
            let r = self.solve_level(&z, Some(g), opts)?;
            z = r.control.clone();
            levels.push(r);
        }
        Ok(GammaSweep { gammas: gammas.to_vec(), levels })
    }

    /// Minimizer of the unpenalized problem without bounds from the normal
    /// equations `(M A⁻¹ M A⁻¹ M + λM) z = M A⁻¹ M u_d`.
    pub fn unconstrained_minimizer(&self) -> Result<Vec<f64>> {
        let ainv_m = self.chol.solve(&self.mass);
        let s = &self.mass * &ainv_m;
        let lhs = &s.transpose() * &ainv_m + &self.mass * self.lambda;
        let rhs = s.transpose() * DVector::from_column_slice(&self.u_d);
        let z = lhs.cholesky().ok_or_else(|| Error::Solver("normal equations are not SPD".into()))?.solve(&rhs);
        Ok(z.as_slice().to_vec())
    }
}

/// Results along a γ schedule.
#[derive(Debug, Clone)]
pub struct GammaSweep {
    pub gammas: Vec<f64>,
    pub levels: Vec<ControlResult>,
}

impl GammaSweep {
    pub fn violations(&self) -> Vec<f64> {
        self.levels.iter().map(|r| r.violation).collect()
    }

    /// Log-log slope of the violation against γ over the levels with a
    /// nonzero violation.
    pub fn slope(&self) -> Result<f64> {
        let (g, v): (Vec<f64>, Vec<f64>) =
            self.gammas.iter().zip(self.violations()).filter(|(_, v)| *v > 0.0).map(|(g, v)| (*g, v)).unzip();
        fit_slope(&g, &v)
    }

    pub fn nonincreasing(&self) -> bool {
        self.violations().windows(2).all(|w| w[1] <= w[0])
    }

    /// `gamma_sweep.csv` with `gamma,viol,objective,pg_norm,iterations,compl`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = self
            .gammas
            .iter()
            .zip(&self.levels)
            .map(|(g, r)| vec![*g, r.violation, r.objective, r.kkt.pg_norm, r.optim.iterations as f64, r.kkt.compl])
            .collect();
        io::write_csv(path, &["gamma", "viol", "objective", "pg_norm", "iterations", "compl"], &rows)
    }
}
