use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::assembly::{exterior_mass, NonlocalMatrix};
use super::grid::Grid1D;
use super::DiscreteField;
use crate::quad::UnitRule;
use crate::{Error, Result};

/// Load vector `⟨f, φ_i⟩_Ω` for every unknown from samples of f on the
/// closed-domain nodes `ia..=ib`, via the P1 mass matrix.
pub fn load_from_samples(grid: &Grid1D, f: &[f64]) -> Result<Vec<f64>> {
    let want = grid.ib - grid.ia + 1;
    if f.len() != want {
        return Err(Error::DimensionMismatch { expected: want, got: f.len() });
    }
    let mut out = vec![0.0; grid.n_dof()];
    let h = grid.h;
    for e in grid.omega_elements() {
        let (fl, fr) = (f[e - grid.ia], f[e + 1 - grid.ia]);
        out[e - 1] += h * (2.0 * fl + fr) / 6.0;
        out[e] += h * (fl + 2.0 * fr) / 6.0;
    }
    Ok(out)
}

/// Load vector from a closure by Gauss quadrature on each element of Ω.
pub fn load_from_fn(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let rule = UnitRule::new(8);
    let mut out = vec![0.0; grid.n_dof()];
    let h = grid.h;
    for e in grid.omega_elements() {
        let x0 = grid.x(e);
        for (sg, w) in rule.nodes.iter().zip(&rule.weights) {
            let fx = f(x0 + sg * h) * w * h;
            out[e - 1] += fx * (1.0 - sg);
            out[e] += fx * sg;
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Weak Dirichlet solve `A_II u_I = F_I − A_IE g`; `load` is indexed by
/// unknown, `g` by `Grid1D::exterior_nodes`.
pub fn solve_dirichlet(mat: &NonlocalMatrix, load: &[f64], g: &[f64]) -> Result<DiscreteField> {
    let grid = &mat.grid;
    if load.len() != grid.n_dof() {
        return Err(Error::DimensionMismatch { expected: grid.n_dof(), got: load.len() });
    }
    let ext = mat.exterior();
    if g.len() != ext.len() {
        return Err(Error::DimensionMismatch { expected: ext.len(), got: g.len() });
    }
    let int = mat.interior();
    let a_ii = mat.a_ii();
    let gv = DVector::from_column_slice(g);
    let coupling = mat.a_ie() * &gv;
    let rhs = DVector::from_fn(int.len(), |i, _| load[int[i]] - coupling[i]);
    let chol = a_ii
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Solver("interior stiffness is not positive definite".into()))?;
    let u = chol.solve(&rhs);
    let res = (&a_ii * &u - &rhs).norm();
    let scale = norm(load).max(coupling.norm()).max(f64::MIN_POSITIVE);
    if res > 1e-10 * scale {
        return Err(Error::Solver(format!("Dirichlet residual {res:e} too large")));
    }
    let mut field = DiscreteField::zeros(grid);
    for (k, &d) in int.iter().enumerate() {
        field.values[d + 1] = u[k];
    }
    for (k, &d) in ext.iter().enumerate() {
        field.values[d + 1] = g[k];
    }
    Ok(field)
}

/// Penalty strength and nonnegative exterior weight.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinConfig {
    pub n: f64,
    /// node-indexed samples (length m+1); only exterior closure nodes are read
    pub kappa: Vec<f64>,
}

impl RobinConfig {
    /// κ constant on all of Ω̃∖Ω.
    pub fn uniform(grid: &Grid1D, n: f64, kappa: f64) -> Self {
        let mut k = vec![0.0; grid.m + 1];
        for i in grid.exterior_closure_nodes() {
            k[i] = kappa;
        }
        RobinConfig { n, kappa: k }
    }

    fn validate(&self, grid: &Grid1D) -> Result<()> {
        if !(self.n > 0.0 && self.n.is_finite()) {
            return Err(Error::Invalid(format!("penalty n must be positive, got {}", self.n)));
        }
        if self.kappa.len() != grid.m + 1 {
            return Err(Error::DimensionMismatch { expected: grid.m + 1, got: self.kappa.len() });
        }
        if self.kappa.iter().any(|k| !(*k >= 0.0) || !k.is_finite()) {
            return Err(Error::Invalid("kappa must be finite and nonnegative".into()));
        }
        let active = grid
            .exterior_elements()
            .iter()
            .any(|&e| self.kappa[e] > 0.0 || self.kappa[e + 1] > 0.0);
        if !active {
            return Err(Error::Solver("singular Robin system: kappa vanishes on the exterior".into()));
        }
        Ok(())
    }
}

/// Factorized Robin operator `R + n M_κ` over all unknowns of Ω̃.
#[derive(Debug, Clone)]
pub struct RobinOperator {
    pub grid: Grid1D,
    pub n: f64,
    pub restricted: DMatrix<f64>,
    pub mass_kappa: DMatrix<f64>,
    pub system: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl RobinOperator {
    pub fn new(mat: &NonlocalMatrix, cfg: &RobinConfig) -> Result<Self> {
        let grid = &mat.grid;
        cfg.validate(grid)?;
        let restricted = mat.restricted();
        let mass_kappa = exterior_mass(grid, &cfg.kappa);
        let system = &restricted + &mass_kappa * cfg.n;
        let chol = system
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Solver("Robin system is not positive definite".into()))?;
        Ok(RobinOperator { grid: grid.clone(), n: cfg.n, restricted, mass_kappa, system, chol })
    }

    /// Solves `(R + n M_κ) u = rhs` for an unknown-indexed right-hand side.
    pub fn solve_raw(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    /// Exterior data (in `exterior_nodes` order) lifted to an unknown vector.
    pub fn lift_exterior(&self, z: &[f64]) -> Result<DVector<f64>> {
        let ext = self.grid.exterior_nodes();
        if z.len() != ext.len() {
            return Err(Error::DimensionMismatch { expected: ext.len(), got: z.len() });
        }
        let mut v = DVector::zeros(self.grid.n_dof());
        for (k, &node) in ext.iter().enumerate() {
            v[node - 1] = z[k];
        }
        Ok(v)
    }

    /// Robin solve with load `F` and exterior data `z`.
    pub fn solve(&self, load: &[f64], z: &[f64]) -> Result<DiscreteField> {
        if load.len() != self.grid.n_dof() {
            return Err(Error::DimensionMismatch { expected: self.grid.n_dof(), got: load.len() });
        }
        let zv = self.lift_exterior(z)?;
        let rhs = DVector::from_column_slice(load) + &self.mass_kappa * zv * self.n;
        let u = self.solve_raw(&rhs);
        let res = (&self.system * &u - &rhs).norm();
        let scale = self.system.amax() * u.norm() * (self.grid.n_dof() as f64).sqrt() + rhs.norm();
        if res > 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Solver(format!("Robin residual {res:e} too large")));
        }
        Ok(DiscreteField::from_dofs(&self.grid, u.as_slice()))
    }
}

/// One-shot Robin solve.
pub fn solve_robin(
    mat: &NonlocalMatrix,
    cfg: &RobinConfig,
    load: &[f64],
    z: &[f64],
) -> Result<DiscreteField> {
    RobinOperator::new(mat, cfg)?.solve(load, z)
}
