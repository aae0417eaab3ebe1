//! Stiffness, tail and mass assembly for P1 hat functions.

use nalgebra::DMatrix;

use super::grid::Grid1D;
use super::kernel::{
    corner_integral, spline_kernel, spline_kernel_series, spline_kernel_stencil, FAR_LAG,
};
use crate::quad::UnitRule;
use crate::specialfn::{cns, FracOrder};
use crate::{Error, Result};

/// Assembled fractional stiffness over all unknowns of Ω̃.
///
/// `full` is the bilinear form over ℝ² for hats extended by zero beyond Ω̃;
/// on a uniform grid it is exactly Toeplitz with first column `lags`.
#[derive(Debug, Clone)]
pub struct NonlocalMatrix {
    pub s: FracOrder,
    pub grid: Grid1D,
    pub cns: f64,
    pub lags: Vec<f64>,
    pub full: DMatrix<f64>,
    interior: Vec<usize>,
    exterior: Vec<usize>,
}

/// Toeplitz stiffness of the ℝ² form.
pub fn assemble_stiffness(grid: &Grid1D, s: FracOrder) -> Result<NonlocalMatrix> {
    let sv = s.get();
    let c = cns(1, sv);
    let n = grid.n_dof();
    let scale = -c * grid.h.powf(1.0 - 2.0 * sv);
    let near = spline_kernel_stencil(sv, FAR_LAG as f64);
    let far = spline_kernel_series(sv, FAR_LAG as f64);
    if ((near - far) / far).abs() > 1e-8 {
        return Err(Error::Assembly(format!(
            "near/far kernel mismatch at lag {FAR_LAG}: {near} vs {far} (s={sv})"
        )));
    }
    let lags: Vec<f64> = (0..n).map(|k| scale * spline_kernel(sv, k as f64)).collect();
    if !(lags[0] > 0.0) || lags.iter().any(|v| !v.is_finite()) {
        return Err(Error::Assembly(format!("non-positive diagonal {} (s={sv})", lags[0])));
    }
    let full = DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)]);
    let dof = |nodes: Vec<usize>| nodes.into_iter().map(|k| k - 1).collect();
    Ok(NonlocalMatrix {
        s,
        grid: grid.clone(),
        cns: c,
        lags,
        full,
        interior: dof(grid.interior_nodes()),
        exterior: dof(grid.exterior_nodes()),
    })
}

impl NonlocalMatrix {
    /// DOF indices of interior nodes.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// DOF indices of exterior nodes.
    pub fn exterior(&self) -> &[usize] {
        &self.exterior
    }

    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.full[(rows[i], cols[j])])
    }

    pub fn a_ii(&self) -> DMatrix<f64> {
        self.block(&self.interior, &self.interior)
    }

    pub fn a_ie(&self) -> DMatrix<f64> {
        self.block(&self.interior, &self.exterior)
    }

    pub fn a_ee(&self) -> DMatrix<f64> {
        self.block(&self.exterior, &self.exterior)
    }

    /// Tail weights ∫ φ_i φ_j τ over Ω̃ (tridiagonal).
    pub fn tail(&self) -> DMatrix<f64> {
        tail_matrix(&self.grid, self.s.get(), 0..self.grid.m)
    }

    /// Form over ℝ² ∖ (ℝ∖Ω)²: the full form minus the exterior-exterior
    /// energy and the exterior part of the tail.
    pub fn restricted(&self) -> DMatrix<f64> {
        let g = &self.grid;
        let ext = g.exterior_elements();
        let mut e = DMatrix::zeros(g.n_dof(), g.n_dof());
        pair_energy(g, self.s.get(), &ext, &ext, &mut e);
        let t = tail_matrix(g, self.s.get(), ext.into_iter());
        &self.full - e - t
    }

    /// Bilinear form value `uᵀ A v` for node-indexed fields.
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.grid.n_dof();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.full[(i, j)] * v[j + 1];
            }
            acc += u[i + 1] * row;
        }
        acc
    }
}

fn gauss12() -> UnitRule {
    UnitRule::new(12)
}

fn add_local(out: &mut DMatrix<f64>, m: usize, nodes: &[usize], local: &[f64], k: usize) {
    for (a, &na) in nodes.iter().enumerate() {
        if na == 0 || na == m {
            continue;
        }
        for (b, &nb) in nodes.iter().enumerate() {
            if nb == 0 || nb == m {
                continue;
            }
            out[(na - 1, nb - 1)] += local[a * k + b];
        }
    }
}

/// Adds `(C/2) ∬_{e×f} (u(x)−u(y))(v(x)−v(y)) |x−y|^{−1−2s}` for every ordered
/// pair `e ∈ ex`, `f ∈ ey`.
pub fn pair_energy(grid: &Grid1D, s: f64, ex: &[usize], ey: &[usize], out: &mut DMatrix<f64>) {
    let c = cns(1, s);
    let h = grid.h;
    let rule = gauss12();
    let same = c / 2.0 * 2.0 * h.powf(3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s)) / (h * h);
    let i20 = corner_integral(s, h, 2, 0);
    let i11 = corner_integral(s, h, 1, 1);
    for &e in ex {
        for &f in ey {
            if e == f {
                let local = [same, -same, -same, same];
                add_local(out, grid.m, &[e, e + 1], &local, 2);
            } else if e.abs_diff(f) == 1 {
                let n = e.max(f);
                let l = [-1.0 / h, 1.0 / h, 0.0];
                let r = [0.0, -1.0 / h, 1.0 / h];
                let mut local = [0.0; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        local[a * 3 + b] =
                            c / 2.0 * (i20 * (l[a] * l[b] + r[a] * r[b]) + i11 * (l[a] * r[b] + r[a] * l[b]));
                    }
                }
                add_local(out, grid.m, &[n - 1, n, n + 1], &local, 3);
            } else {
                let mut local = [0.0; 16];
                let xe = grid.x(e);
                let yf = grid.x(f);
                for (sx, wx) in rule.nodes.iter().zip(&rule.weights) {
                    for (sy, wy) in rule.nodes.iter().zip(&rule.weights) {
                        let d = (xe + sx * h - yf - sy * h).abs();
                        let kw = wx * wy * h * h * d.powf(-1.0 - 2.0 * s) * c / 2.0;
                        let psi = [1.0 - sx, *sx, -(1.0 - sy), -sy];
                        for a in 0..4 {
                            for b in 0..4 {
                                local[a * 4 + b] += kw * psi[a] * psi[b];
                            }
                        }
                    }
                }
                add_local(out, grid.m, &[e, e + 1, f, f + 1], &local, 4);
            }
        }
    }
}

/// ∫ φ_i φ_j τ over the listed elements, τ(x) = C/(2s) [(B−x)^{−2s} + (x−A)^{−2s}].
pub fn tail_matrix(grid: &Grid1D, s: f64, elements: impl Iterator<Item = usize>) -> DMatrix<f64> {
    let rule = UnitRule::new(16);
    let n = grid.n_dof();
    let m = grid.m;
    let mut out = DMatrix::zeros(n, n);
    let scale = cns(1, s) / (2.0 * s) * grid.h.powf(1.0 - 2.0 * s);
    let q = -2.0 * s;
    for e in elements {
        // local products (1−σ)², σ(1−σ), σ² against the two weights
        let mut mom = [0.0; 3];
        let ef = e as f64;
        let rf = (m - e) as f64;
        let prods = |sg: f64| [(1.0 - sg) * (1.0 - sg), sg * (1.0 - sg), sg * sg];
        if e == 0 {
            mom[2] += 1.0 / (3.0 - 2.0 * s);
        } else {
            for (sg, w) in rule.nodes.iter().zip(&rule.weights) {
                let p = prods(*sg);
                let wt = w * (ef + sg).powf(q);
                for k in 0..3 {
                    mom[k] += wt * p[k];
                }
            }
        }
        if e == m - 1 {
            mom[0] += 1.0 / (3.0 - 2.0 * s);
        } else {
            for (sg, w) in rule.nodes.iter().zip(&rule.weights) {
                let p = prods(*sg);
                let wt = w * (rf - sg).powf(q);
                for k in 0..3 {
                    mom[k] += wt * p[k];
                }
            }
        }
        let local = [mom[0], mom[1], mom[1], mom[2]].map(|v| v * scale);
        add_local(&mut out, m, &[e, e + 1], &local, 2);
    }
    out
}

/// Full ℝ² form assembled element by element over Ω̃ plus the tail; used to
/// validate the Toeplitz route.
pub fn assemble_by_elements(grid: &Grid1D, s: FracOrder) -> DMatrix<f64> {
    let all: Vec<usize> = (0..grid.m).collect();
    let mut out = tail_matrix(grid, s.get(), 0..grid.m);
    pair_energy(grid, s.get(), &all, &all, &mut out);
    out
}

/// Exterior mass ∫_{Ω̃∖Ω} κ φ_i φ_j with κ piecewise linear through node
/// samples `kappa` (indexed by node, only exterior closure nodes are read).
pub fn exterior_mass(grid: &Grid1D, kappa: &[f64]) -> DMatrix<f64> {
    let n = grid.n_dof();
    let mut out = DMatrix::zeros(n, n);
    let g = 0.5 / 3f64.sqrt();
    for e in grid.exterior_elements() {
        let mut local = [0.0; 4];
        for sg in [0.5 - g, 0.5 + g] {
            let k = kappa[e] * (1.0 - sg) + kappa[e + 1] * sg;
            let l = [1.0 - sg, sg];
            for a in 0..2 {
                for b in 0..2 {
                    local[a * 2 + b] += 0.5 * grid.h * k * l[a] * l[b];
                }
            }
        }
        add_local(&mut out, grid.m, &[e, e + 1], &local, 2);
    }
    out
}

/// Consistent P1 mass over the listed elements, indexed by DOF.
pub fn mass_matrix(grid: &Grid1D, elements: impl Iterator<Item = usize>) -> DMatrix<f64> {
    let n = grid.n_dof();
    let mut out = DMatrix::zeros(n, n);
    let d = grid.h / 3.0;
    let o = grid.h / 6.0;
    for e in elements {
        add_local(&mut out, grid.m, &[e, e + 1], &[d, o, o, d], 2);
    }
    out
}
