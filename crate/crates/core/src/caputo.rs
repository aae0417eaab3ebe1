//! L1 discretization of the Caputo derivative and explicit fractional IVP
//! stepping, plus the right Riemann-Liouville integral.

use std::path::Path;

use crate::specialfn::{gamma_fn, pow_diff, TimeOrder};
use crate::{io, Error, Result};

/// Uniform grid `t_j = j*tau` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_steps: usize,
    pub tau: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) || n_steps == 0 {
            return Err(Error::Invalid(format!(
                "time grid needs T > 0 and at least one step (T={t_final}, N={n_steps})"
            )));
        }
        Ok(TimeGrid { t_final, n_steps, tau: t_final / n_steps as f64 })
    }

    /// Grid from a step size; `T/tau` must be an integer up to rounding.
    pub fn from_step(t_final: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Invalid(format!("step size must be positive, got {tau}")));
        }
        let n = (t_final / tau).round();
        if n < 1.0 || ((n * tau - t_final) / t_final).abs() > 1e-9 {
            return Err(Error::Invalid(format!("T={t_final} is not a multiple of tau={tau}")));
        }
        Self::new(t_final, n as usize)
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.t_final
        } else {
            j as f64 * self.tau
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|j| self.node(j)).collect()
    }
}

/// L1 weights `a_k = (k+1)^{1-γ} - k^{1-γ}`, stored for `k = 0..=count`
/// (so `a[0] = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct CaputoWeights {
    pub gamma: TimeOrder,
    pub a: Vec<f64>,
}

impl CaputoWeights {
    pub fn get(&self, k: usize) -> f64 {
        self.a[k]
    }
}

pub fn l1_weights(gamma: TimeOrder, count: usize) -> CaputoWeights {
    let p = 1.0 - gamma.get();
    let a = (0..=count)
        .map(|k| {
            if p == 0.0 {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                pow_diff(p, k as f64, k as f64 + 1.0)
            }
        })
        .collect();
    CaputoWeights { gamma, a }
}

/// Time grid plus the full state history.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<Vec<f64>>,
    pub dim: usize,
}

impl Trajectory {
    /// Component `c` across all nodes.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.states.iter().map(|u| u[c]).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim).map(|c| format!("u_{c}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<f64>> = self
            .states
            .iter()
            .enumerate()
            .map(|(j, u)| {
                let mut r = vec![self.grid.node(j)];
                r.extend_from_slice(u);
                r
            })
            .collect();
        io::write_csv(path, &header, &rows)
    }
}

/// Magnitude beyond which the explicit scheme is declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// Explicit L1 stepping for `d_t^γ u = f(u)`:
///
/// u_{j+1} = u_j − Σ_{k=0}^{j−1} a_{j−k}(u_{k+1} − u_k) + τ^γ Γ(2−γ) f(u_j).
pub fn solve_fivp<F>(mut rhs: F, u0: &[f64], grid: TimeGrid, gamma: TimeOrder) -> Result<Trajectory>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let dim = u0.len();
    let n = grid.n_steps;
    let w = l1_weights(gamma, n);
    let g = gamma.get();
    let c = grid.tau.powf(g) * gamma_fn(2.0 - g)?;
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut incr: Vec<Vec<f64>> = Vec::with_capacity(n);
    states.push(u0.to_vec());
    for j in 0..n {
        let uj = &states[j];
        let f = rhs(uj);
        if f.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: f.len() });
        }
        let mut hist = vec![0.0; dim];
        for (k, d) in incr.iter().enumerate() {
            let a = w.a[j - k];
            for (h, di) in hist.iter_mut().zip(d) {
                *h += a * di;
            }
        }
        let next: Vec<f64> = (0..dim).map(|i| uj[i] - hist[i] + c * f[i]).collect();
        if next.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND) {
            return Err(Error::Divergence { step: j + 1 });
        }
        incr.push(next.iter().zip(uj).map(|(a, b)| a - b).collect());
        states.push(next);
    }
    Ok(Trajectory { grid, states, dim })
}

/// L1 approximation of the Caputo derivative at every node,
/// `τ^{-γ}/Γ(2−γ) Σ_{k<j} a_{j−1−k}(u_{k+1} − u_k)`.
pub fn l1_derivative(u: &[f64], gamma: TimeOrder, grid: TimeGrid) -> Result<Vec<f64>> {
    check_len(u, grid)?;
    let w = l1_weights(gamma, grid.n_steps);
    let g = gamma.get();
    let scale = 1.0 / (grid.tau.powf(g) * gamma_fn(2.0 - g)?);
    Ok((0..=grid.n_steps)
        .map(|j| {
            let mut acc = 0.0;
            for k in 0..j {
                acc += w.a[j - 1 - k] * (u[k + 1] - u[k]);
            }
            acc * scale
        })
        .collect())
}

fn check_len(f: &[f64], grid: TimeGrid) -> Result<()> {
    if f.len() != grid.n_steps + 1 {
        return Err(Error::DimensionMismatch { expected: grid.n_steps + 1, got: f.len() });
    }
    Ok(())
}

/// Right Riemann-Liouville integral
/// `I^γ_{t,T} f(t) = 1/Γ(γ) ∫_t^T (r−t)^{γ−1} f(r) dr` at every node, for the
/// piecewise-linear interpolant of the samples.
pub fn rl_integral_right(f: &[f64], gamma: TimeOrder, grid: TimeGrid) -> Result<Vec<f64>> {
    check_len(f, grid)?;
    let n = grid.n_steps;
    let g = gamma.get();
    // moments over [m, m+1] in units of tau:
    // w0 = ∫ σ^{γ−1}, w1 = ∫ σ^{γ−1}(σ − m)
    let mut w0 = Vec::with_capacity(n);
    let mut w1 = Vec::with_capacity(n);
    for m in 0..n {
        let lo = m as f64;
        let hi = lo + 1.0;
        let a0 = pow_diff(g, lo, hi) / g;
        let a1 = pow_diff(g + 1.0, lo, hi) / (g + 1.0) - lo * a0;
        w0.push(a0);
        w1.push(a1);
    }
    let scale = grid.tau.powf(g) / gamma_fn(g)?;
    Ok((0..=n)
        .map(|i| {
            let mut acc = 0.0;
            for m in i..n {
                let d = m - i;
                acc += f[m] * (w0[d] - w1[d]) + f[m + 1] * w1[d];
            }
            acc * scale
        })
        .collect())
}

/// Discrete defect of the fractional integration-by-parts identity
/// `∫ v ᶜ∂^γ u − ∫ (∂^γ_{t,T} v) u − [(I^{1−γ}_{t,T} v) u]_0^T`.
///
/// The Caputo derivative is the L1 operator and ∫ v ᶜ∂u uses the trapezoid
/// rule. The right derivative is `−d/dt I^{1−γ}_{t,T} v`; its pairing with `u`
/// is evaluated interval by interval with the exact increment of the
/// integral and the midpoint value of `u`.
pub fn ipf_residual(u: &[f64], v: &[f64], gamma: TimeOrder, grid: TimeGrid) -> Result<f64> {
    check_len(u, grid)?;
    check_len(v, grid)?;
    let n = grid.n_steps;
    let du = l1_derivative(u, gamma, grid)?;
    let mut lhs = 0.0;
    for j in 0..=n {
        let wt = if j == 0 || j == n { 0.5 } else { 1.0 };
        lhs += wt * v[j] * du[j];
    }
    lhs *= grid.tau;
    let w = if gamma.get() == 1.0 {
        // I^0 is the identity
        v.to_vec()
    } else {
        rl_integral_right(v, TimeOrder::new(1.0 - gamma.get())?, grid)?
    };
    let mut rhs = 0.0;
    for k in 0..n {
        rhs -= (w[k + 1] - w[k]) * 0.5 * (u[k] + u[k + 1]);
    }
    let bracket = w[n] * u[n] - w[0] * u[0];
    Ok((lhs - rhs - bracket).abs())
}
