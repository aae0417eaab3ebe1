//! Brute-force quadrature oracles, independent of the library's closed forms.
#![allow(dead_code)]

use quadrature::double_exponential;

pub fn c1s(s: f64) -> f64 {
    // C_{1,s} = s 4^s Γ(1/2+s) / (√π Γ(1−s)), Γ from the integral definition
    s * 4f64.powf(s) * gamma_oracle(0.5 + s) / (std::f64::consts::PI.sqrt() * gamma_oracle(1.0 - s))
}

/// Γ(x) = Γ(x+1)/x with Γ(x+1) = ∫_0^∞ tˣ e^{−t} dt, which keeps the
/// integrand bounded for x > 0.
pub fn gamma_oracle(x: f64) -> f64 {
    let mut acc = 0.0;
    let mut lo = 0.0;
    while lo < 200.0 {
        acc += double_exponential::integrate(|t: f64| t.powf(x) * (-t).exp(), lo, lo + 1.0, 1e-16).integral;
        lo += 1.0;
    }
    acc / x
}

/// ∫_0^T d(t) t^{−1−2s} dt for a numerator with d(t) = O(t²) at 0. Below
/// `t0` the numerator is replaced by its quadratic model d(t0)(t/t0)², since
/// rounding in d would otherwise be amplified by the kernel.
fn kernel_integral(d: &dyn Fn(f64) -> f64, breaks: &[f64], t0: f64, s: f64) -> f64 {
    let mut acc = d(t0) * t0.powf(-2.0 * s) / (2.0 - 2.0 * s);
    for w in breaks.windows(2) {
        let (a, b) = (w[0].max(t0), w[1]);
        if b > a {
            acc += double_exponential::integrate(|t: f64| d(t) * t.powf(-1.0 - 2.0 * s), a, b, 1e-15).integral;
        }
    }
    acc
}

fn hat(xc: f64, h: f64, x: f64) -> f64 {
    (1.0 - (x - xc).abs() / h).max(0.0)
}

/// g(t) = ∫ φ_i(x) φ_j(x + t) dx by Simpson on every piece between kinks.
fn correlation(xi: f64, xj: f64, h: f64, t: f64) -> f64 {
    let mut br = vec![xi - h, xi, xi + h, xj - h - t, xj - t, xj + h - t];
    br.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = 0.0;
    for w in br.windows(2) {
        let (a, b) = (w[0].max(xi - h), w[1].min(xi + h));
        if b <= a {
            continue;
        }
        let f = |x: f64| hat(xi, h, x) * hat(xj, h, x + t);
        acc += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
    }
    acc
}

/// (C/2)∬ (φ_i(x)−φ_i(y))(φ_j(x)−φ_j(y)) |x−y|^{−1−2s} over ℝ², written as
/// C ∫_0^∞ [2g(0) − g(t) − g(−t)] t^{−1−2s} dt.
pub fn stiffness_entry(xi: f64, xj: f64, h: f64, s: f64) -> f64 {
    let g0 = correlation(xi, xj, h, 0.0);
    let d = |t: f64| 2.0 * g0 - correlation(xi, xj, h, t) - correlation(xi, xj, h, -t);
    let reach = ((xi - xj).abs() / h).round() + 2.0;
    let breaks: Vec<f64> = (0..=reach as usize).map(|k| k as f64 * h).collect();
    let tmax = reach * h;
    let mut acc = kernel_integral(&d, &breaks, 1e-5 * h, s);
    acc += 2.0 * g0 * tmax.powf(-2.0 * s) / (2.0 * s);
    c1s(s) * acc
}

/// (−Δ)ˢu(x) = C ∫_0^∞ (2u(x) − u(x+t) − u(x−t)) t^{−1−2s} dt for u with
/// compact support in [lo, hi] and kinks at `kinks`.
pub fn frac_lap(u: &dyn Fn(f64) -> f64, kinks: &[f64], lo: f64, hi: f64, x: f64, s: f64) -> f64 {
    let mut br: Vec<f64> = vec![0.0];
    for &k in kinks.iter().chain([lo, hi].iter()) {
        let d = (k - x).abs();
        if d > 0.0 {
            br.push(d);
        }
    }
    br.sort_by(|a, b| a.partial_cmp(b).unwrap());
    br.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let tmax = *br.last().unwrap();
    let ux = u(x);
    let f = |t: f64| 2.0 * ux - u(x + t) - u(x - t);
    let t0 = 1e-6 * br[1];
    let mut acc = kernel_integral(&f, &br, t0, s);
    acc += 2.0 * ux * tmax.powf(-2.0 * s) / (2.0 * s);
    c1s(s) * acc
}

/// 𝒩ₛu(x) = C ∫_a^b (u(x) − u(y)) |x−y|^{−1−2s} dy for x outside [a, b].
pub fn normal_derivative(u: &dyn Fn(f64) -> f64, kinks: &[f64], a: f64, b: f64, x: f64, s: f64) -> f64 {
    let mut br: Vec<f64> = kinks.iter().copied().filter(|&k| k > a && k < b).collect();
    br.push(a);
    br.push(b);
    br.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let ux = u(x);
    let mut acc = 0.0;
    for w in br.windows(2) {
        acc += double_exponential::integrate(|y: f64| (ux - u(y)) * (x - y).abs().powf(-1.0 - 2.0 * s), w[0], w[1], 1e-15)
            .integral;
    }
    c1s(s) * acc
}
