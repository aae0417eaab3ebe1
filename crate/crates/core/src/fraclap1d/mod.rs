//! 1D finite elements for the integral fractional Laplacian with exterior
//! data: Dirichlet and Robin solves, the nonlocal normal derivative and
//! convergence diagnostics.

mod assembly;
mod diagnostics;
mod grid;
pub mod kernel;
mod solve;

pub use assembly::{
    assemble_by_elements, assemble_stiffness, exterior_mass, mass_matrix, pair_energy, tail_matrix,
    NonlocalMatrix,
};
pub use diagnostics::{
    convergence_study, exterior_pairing, fit_slope, frac_lap_pointwise, ibp_residual,
    l2_distance, l2_error, nonlocal_normal_derivative, omega_pairing, torsion_constant,
    torsion_exact, very_weak_residual, RateReport, RobinErrors, RobinStudy,
};
pub use grid::{Grid1D, NodeKind};
pub use solve::{
    load_from_fn, load_from_samples, solve_dirichlet, solve_robin, RobinConfig, RobinOperator,
};

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::{io, Result};

/// Piecewise-linear field on the nodes of Ω̃, zero beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub grid: Grid1D,
    /// one value per node `0..=m`; the two collar end nodes stay 0
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(grid: &Grid1D) -> Self {
        DiscreteField { grid: grid.clone(), values: vec![0.0; grid.m + 1] }
    }

    /// Nodal interpolant of `f` on the unknowns.
    pub fn interpolate(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let mut v = Self::zeros(grid);
        for i in 1..grid.m {
            v.values[i] = f(grid.x(i));
        }
        v
    }

    /// Field with the given values on the unknowns (length `m−1`).
    pub fn from_dofs(grid: &Grid1D, dofs: &[f64]) -> Self {
        let mut v = Self::zeros(grid);
        v.values[1..grid.m].copy_from_slice(dofs);
        v
    }

    pub fn dofs(&self) -> &[f64] {
        &self.values[1..self.grid.m]
    }

    /// Values on the exterior unknowns, in `Grid1D::exterior_nodes` order.
    pub fn exterior_values(&self) -> Vec<f64> {
        self.grid.exterior_nodes().iter().map(|&i| self.values[i]).collect()
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.grid.locate(x) {
            None => 0.0,
            Some(e) => {
                let x0 = self.grid.x(e);
                let t = ((x - x0) / self.grid.h).clamp(0.0, 1.0);
                self.values[e] * (1.0 - t) + self.values[e + 1] * t
            }
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> =
            (0..=self.grid.m).map(|i| vec![self.grid.x(i), self.values[i]]).collect();
        io::write_csv(path, &["x", "u"], &rows)
    }
}

/// Dumps a matrix as `i,j,value` triplets (nonzeros only).
pub fn write_matrix_csv(path: &Path, a: &DMatrix<f64>) -> Result<()> {
    let mut out = String::from("i,j,value\n");
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let v = a[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{i},{j},{}", io::fmt_f64(v));
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
