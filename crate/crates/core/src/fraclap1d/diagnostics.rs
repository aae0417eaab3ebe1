//! Nonlocal normal derivative, exact pairings and convergence helpers.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::assembly::NonlocalMatrix;
use super::kernel::{corner_integral, g_second, g_second_moment, pow_int};
use super::grid::Grid1D;
use super::solve::{load_from_fn, solve_dirichlet, solve_robin, RobinConfig};
use super::assembly::assemble_stiffness;
use super::DiscreteField;
use crate::quad::{self, UnitRule};
use crate::specialfn::{cns, gamma_fn};
use crate::{io, Error, FracOrder, Result};

/// `𝒩ₛu(x) = C ∫_Ω (u(x) − u(y)) |x−y|^{−1−2s} dy` at points outside Ω̄,
/// integrated in closed form on each element of Ω.
pub fn nonlocal_normal_derivative(u: &DiscreteField, s: f64, xs: &[f64]) -> Result<Vec<f64>> {
    let g = &u.grid;
    let c = cns(1, s);
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        if x >= g.a && x <= g.b {
            return Err(Error::Domain(format!("x={x} lies in the closed domain")));
        }
        let ux = u.eval(x);
        let mut acc = 0.0;
        for e in g.omega_elements() {
            let (y0, y1) = (g.x(e), g.x(e + 1));
            let q = (u.values[e + 1] - u.values[e]) / g.h;
            // u(y) = p + q (y − x)
            let p = u.values[e] + q * (x - y0);
            let (lo, hi, sign) = if y0 > x { (y0 - x, y1 - x, 1.0) } else { (x - y1, x - y0, -1.0) };
            acc += (ux - p) * pow_int(-2.0 * s, lo, hi) - q * sign * pow_int(1.0 - 2.0 * s, lo, hi);
        }
        out.push(c * acc);
    }
    Ok(out)
}

/// Pointwise `(−Δ)ˢ v(x)` of a P1 field extended by zero, through the second
/// difference of the kernel's second antiderivative.
pub fn frac_lap_pointwise(v: &DiscreteField, s: f64, x: f64) -> f64 {
    let g = &v.grid;
    let c = cns(1, s);
    let mut acc = 0.0;
    for p in 1..g.m {
        let vp = v.values[p];
        if vp == 0.0 {
            continue;
        }
        let d2 = g_second(s, x - g.x(p - 1)) - 2.0 * g_second(s, x - g.x(p)) + g_second(s, x - g.x(p + 1));
        acc += vp * d2;
    }
    -c / g.h * acc
}

/// `∫_Ω u (−Δ)ˢ v` for P1 fields, exact on every element.
pub fn omega_pairing(u: &DiscreteField, v: &DiscreteField, s: f64) -> f64 {
    let g = &u.grid;
    let h = g.h;
    let rule = UnitRule::new(12);
    let m0 = g_second_moment(s, 0, h);
    let m1 = g_second_moment(s, 1, h);
    // J[q] = ∫_Ω u(x) G(x − x_q) dx
    let mut j = vec![0.0; g.m + 1];
    for (q, jq) in j.iter_mut().enumerate() {
        let xq = g.x(q);
        for e in g.omega_elements() {
            let (ul, ur) = (u.values[e], u.values[e + 1]);
            if ul == 0.0 && ur == 0.0 {
                continue;
            }
            if q == e {
                *jq += ul * m0 + (ur - ul) / h * m1;
            } else if q == e + 1 {
                *jq += ur * m0 - (ur - ul) / h * m1;
            } else {
                let x0 = g.x(e);
                *jq += rule.integrate(0.0, 1.0, |t| (ul * (1.0 - t) + ur * t) * g_second(s, x0 + t * h - xq)) * h;
            }
        }
    }
    let mut acc = 0.0;
    for p in 1..g.m {
        let vp = v.values[p];
        if vp != 0.0 {
            acc += vp * (j[p - 1] - 2.0 * j[p] + j[p + 1]);
        }
    }
    -cns(1, s) / h * acc
}

/// `∫_{Ω̃∖Ω} w 𝒩ₛu dx` as an exact double integral (corner elements in closed
/// form, all other element pairs by tensor Gauss).
pub fn exterior_pairing(w: &DiscreteField, u: &DiscreteField, s: f64) -> f64 {
    let g = &u.grid;
    let h = g.h;
    let c = cns(1, s);
    let rule = UnitRule::new(12);
    let i10 = corner_integral(s, h, 1, 0);
    let i20 = corner_integral(s, h, 2, 0);
    let i11 = corner_integral(s, h, 1, 1);
    let uv = &u.values;
    let wv = &w.values;
    let mut acc = 0.0;
    for e in g.exterior_elements() {
        if wv[e] == 0.0 && wv[e + 1] == 0.0 {
            continue;
        }
        for f in g.omega_elements() {
            if e + 1 == g.ia && f == g.ia {
                let na = g.ia;
                let om = (wv[na] - wv[na - 1]) / h;
                let al = (uv[na] - uv[na - 1]) / h;
                let be = (uv[na + 1] - uv[na]) / h;
                acc += -wv[na] * al * i10 - wv[na] * be * i10 + om * al * i20 + om * be * i11;
            } else if e == g.ib && f + 1 == g.ib {
                let nb = g.ib;
                let om = (wv[nb + 1] - wv[nb]) / h;
                let al = (uv[nb + 1] - uv[nb]) / h;
                let be = (uv[nb] - uv[nb - 1]) / h;
                acc += wv[nb] * al * i10 + wv[nb] * be * i10 + om * al * i20 + om * be * i11;
            } else {
                let (xe, yf) = (g.x(e), g.x(f));
                let mut part = 0.0;
                for (sx, wx) in rule.nodes.iter().zip(&rule.weights) {
                    let wxv = wv[e] * (1.0 - sx) + wv[e + 1] * sx;
                    let ux = uv[e] * (1.0 - sx) + uv[e + 1] * sx;
                    let x = xe + sx * h;
                    for (sy, wy) in rule.nodes.iter().zip(&rule.weights) {
                        let uy = uv[f] * (1.0 - sy) + uv[f + 1] * sy;
                        let d = (x - yf - sy * h).abs();
                        part += wx * wy * wxv * (ux - uy) * d.powf(-1.0 - 2.0 * s);
                    }
                }
                acc += part * h * h;
            }
        }
    }
    c * acc
}

fn dofs(v: &DiscreteField) -> DVector<f64> {
    DVector::from_column_slice(v.dofs())
}

/// Defect of the nonlocal integration-by-parts identity
/// `|a_R(u, v) − ∫_Ω v (−Δ)ˢu − ∫_{Ω̃∖Ω} v 𝒩ₛu|` where `lap_u` is a known
/// `(−Δ)ˢu` on Ω and `restricted` the restricted form matrix.
pub fn ibp_residual(
    restricted: &DMatrix<f64>,
    s: f64,
    u: &DiscreteField,
    lap_u: impl Fn(f64) -> f64,
    v: &DiscreteField,
) -> f64 {
    let g = &u.grid;
    let form = (dofs(u).transpose() * restricted * dofs(v))[(0, 0)];
    let mut vol = 0.0;
    for e in g.omega_elements() {
        let (x0, x1) = (g.x(e), g.x(e + 1));
        let out = quad::adaptive(|x| v.eval(x) * lap_u(x), &[x0, x1], 1e-15, 1e-13, 200);
        vol += out.value;
    }
    let ext = exterior_pairing(v, u, s);
    (form - vol - ext).abs()
}

/// Very-weak defect `max_v |∫_Ω u (−Δ)ˢv − ⟨f, v⟩ + ∫_{Ω̃∖Ω} g 𝒩ₛv|` over
/// probes supported in Ω. `load` is the unknown-indexed vector of `⟨f, φ_i⟩`.
pub fn very_weak_residual(
    u: &DiscreteField,
    s: f64,
    load: &[f64],
    probes: &[DiscreteField],
) -> Result<f64> {
    let g = &u.grid;
    let mut gfield = DiscreteField::zeros(g);
    for i in g.exterior_nodes() {
        gfield.values[i] = u.values[i];
    }
    let mut worst: f64 = 0.0;
    for v in probes {
        if g.exterior_nodes().iter().any(|&i| v.values[i] != 0.0) {
            return Err(Error::Invalid("probe fields must vanish outside the domain".into()));
        }
        let lhs = omega_pairing(u, v, s);
        let fv: f64 = load.iter().zip(v.dofs()).map(|(a, b)| a * b).sum();
        let ext = exterior_pairing(&gfield, v, s);
        worst = worst.max((lhs - fv + ext).abs());
    }
    Ok(worst)
}

/// `Γ(1/2) / (2^{2s} Γ(s+1/2) Γ(s+1))`.
pub fn torsion_constant(s: f64) -> f64 {
    std::f64::consts::PI.sqrt()
        / (2f64.powf(2.0 * s) * gamma_fn(s + 0.5).unwrap() * gamma_fn(s + 1.0).unwrap())
}

/// `c_s (R² − x²)₊ˢ`, which satisfies `(−Δ)ˢu = 1` on (−R, R).
pub fn torsion_exact(s: f64, radius: f64, x: f64) -> f64 {
    let r = radius * radius - x * x;
    if r <= 0.0 {
        0.0
    } else {
        torsion_constant(s) * r.powf(s)
    }
}

/// `‖u_h − u‖_{L²}` over the listed elements, adaptive on each element.
pub fn l2_error(
    u: &DiscreteField,
    exact: impl Fn(f64) -> f64,
    elements: impl Iterator<Item = usize>,
) -> f64 {
    let g = &u.grid;
    let mut acc = 0.0;
    for e in elements {
        let (x0, x1) = (g.x(e), g.x(e + 1));
        let out = quad::adaptive(|x| (u.eval(x) - exact(x)).powi(2), &[x0, x1], 1e-20, 1e-10, 400);
        acc += out.value;
    }
    acc.sqrt()
}

/// L² distance of two fields on the same grid over all of Ω̃ (exact for P1).
pub fn l2_distance(u: &DiscreteField, v: &DiscreteField) -> f64 {
    let g = &u.grid;
    let mut acc = 0.0;
    for e in 0..g.m {
        let d0 = u.values[e] - v.values[e];
        let d1 = u.values[e + 1] - v.values[e + 1];
        acc += g.h / 3.0 * (d0 * d0 + d0 * d1 + d1 * d1);
    }
    acc.sqrt()
}

/// Least-squares slope of log(error) against log(param).
pub fn fit_slope(params: &[f64], errors: &[f64]) -> Result<f64> {
    if params.len() != errors.len() {
        return Err(Error::DimensionMismatch { expected: params.len(), got: errors.len() });
    }
    if params.len() < 2 {
        return Err(Error::Invalid("at least two points are needed for a slope".into()));
    }
    let xs: Vec<f64> = params.iter().map(|p| p.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Refinement table with its fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub params: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

impl RateReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<f64>> = self
            .params
            .iter()
            .zip(&self.errors)
            .enumerate()
            .map(|(i, (p, e))| vec![i as f64, *p, *e, self.slope])
            .collect();
        io::write_csv(path, &["level", "param", "error", "slope"], &rows)
    }

    /// Strictly decreasing errors along the level order.
    pub fn strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }
}

/// Runs `error_at` for every parameter level and fits the rate; at least
/// three levels are required.
pub fn convergence_study(
    params: &[f64],
    mut error_at: impl FnMut(f64) -> Result<f64>,
) -> Result<RateReport> {
    if params.len() < 3 {
        return Err(Error::Invalid(format!(
            "convergence study needs at least 3 levels, got {}",
            params.len()
        )));
    }
    let mut errors = Vec::with_capacity(params.len());
    for &p in params {
        errors.push(error_at(p)?);
    }
    let slope = fit_slope(params, &errors)?;
    Ok(RateReport { params: params.to_vec(), errors, slope })
}

impl NonlocalMatrix {
    /// Field-level convenience for `nonlocal_normal_derivative`.
    pub fn normal_derivative(&self, u: &DiscreteField, xs: &[f64]) -> Result<Vec<f64>> {
        nonlocal_normal_derivative(u, self.s.get(), xs)
    }
}

/// Robin-versus-Dirichlet experiment with a known solution: `f ≡ 1` on Ω
/// and exterior data equal to the torsion profile of radius
/// `data_radius ≥ b`, which therefore solves the Dirichlet problem exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinStudy {
    pub a: f64,
    pub b: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub h: f64,
    pub s: f64,
    pub kappa: f64,
    pub data_radius: f64,
}

impl Default for RobinStudy {
    fn default() -> Self {
        RobinStudy { a: -1.0, b: 1.0, big_a: -2.0, big_b: 2.0, h: 1.0 / 64.0, s: 0.5, kappa: 1.0, data_radius: 1.5 }
    }
}

/// Errors of one Robin solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinErrors {
    /// `‖u_n − u_D‖_{L²(Ω̃)}` against the discrete Dirichlet solution
    pub to_discrete: f64,
    /// `‖u_n − u‖_{L²(Ω)}` against the exact solution
    pub to_exact: f64,
}

impl RobinStudy {
    fn exact(&self, x: f64) -> f64 {
        torsion_exact(self.s, self.data_radius, x)
    }

    /// Robin errors at every penalty in `ns`, with the discrete Dirichlet
    /// solution on the same mesh as reference.
    pub fn errors(&self, ns: &[f64]) -> Result<Vec<RobinErrors>> {
        if self.data_radius < self.b.abs().max(self.a.abs()) {
            return Err(Error::Invalid("data radius must cover the domain".into()));
        }
        let g = Grid1D::new(self.a, self.b, self.big_a, self.big_b, self.h)?;
        let mat = assemble_stiffness(&g, FracOrder::new(self.s)?)?;
        let load = load_from_fn(&g, |_| 1.0);
        let gx: Vec<f64> = g.exterior_nodes().iter().map(|&i| self.exact(g.x(i))).collect();
        let ud = solve_dirichlet(&mat, &load, &gx)?;
        ns.iter()
            .map(|&n| {
                let u = solve_robin(&mat, &RobinConfig::uniform(&g, n, self.kappa), &load, &gx)?;
                Ok(RobinErrors { to_discrete: l2_distance(&u, &ud), to_exact: l2_error(&u, |x| self.exact(x), g.omega_elements()) })
            })
            .collect()
    }

    /// Rate of `‖u_n − u_D‖` in n.
    pub fn rate(&self, ns: &[f64]) -> Result<RateReport> {
        let errs = self.errors(ns)?;
        let mut it = errs.iter();
        convergence_study(ns, |_| Ok(it.next().expect("one error per level").to_discrete))
    }
}
