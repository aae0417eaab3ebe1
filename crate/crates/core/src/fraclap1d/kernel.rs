//! Closed-form kernel integrals for |t|^{-1-2s} against piecewise polynomials.

/// `expm1(x)/x`, equal to 1 at 0.
pub fn exprel(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        1.0 + x / 2.0 + x * x / 6.0
    } else {
        x.exp_m1() / x
    }
}

/// `∫_lo^hi t^{q-1} dt` for `0 <= lo <= hi` (`q > 0` required when `lo = 0`).
pub fn pow_int(q: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo <= 0.0 {
        return hi.powf(q) / q;
    }
    let l = (hi / lo).ln();
    lo.powf(q) * l * exprel(q * l)
}

/// `(t^ε − 1)/ε`, the regularized power (→ ln t as ε → 0).
pub fn g_eps(eps: f64, t: f64) -> f64 {
    let l = t.ln();
    l * exprel(eps * l)
}

/// Fourth antiderivative of |t|^{-1-2s} with the cubic part removed.
pub fn psi(s: f64, t: f64) -> f64 {
    let t = t.abs();
    if t == 0.0 {
        return 0.0;
    }
    let eps = 1.0 - 2.0 * s;
    t * t * g_eps(eps, t) / ((3.0 - 2.0 * s) * (2.0 - 2.0 * s) * (-2.0 * s))
}

/// Second antiderivative of |t|^{-1-2s} with the constant removed.
pub fn g_second(s: f64, t: f64) -> f64 {
    g_eps(1.0 - 2.0 * s, t.abs()) / (-2.0 * s)
}

/// Antiderivative `∫_0^t r^k g_second(r) dr` for `t >= 0`.
pub fn g_second_moment(s: f64, k: u32, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let eps = 1.0 - 2.0 * s;
    let k1 = (k + 1) as f64;
    t.powi(k as i32 + 1) * (k1 * g_eps(eps, t) - 1.0) / (k1 * (k1 + eps)) / (-2.0 * s)
}

const STENCIL: [f64; 5] = [1.0, -4.0, 6.0, -4.0, 1.0];

/// Lags from which the far-field expansion replaces the stencil.
pub const FAR_LAG: usize = 8;

/// `E|k + U|^{-1-2s}` for U the sum of four uniforms on (-1/2, 1/2), via the
/// fourth central difference of `psi`.
pub fn spline_kernel_stencil(s: f64, k: f64) -> f64 {
    let mut acc = 0.0;
    for (m, c) in STENCIL.iter().enumerate() {
        acc += c * psi(s, k + m as f64 - 2.0);
    }
    acc
}

/// Even moments of the sum of four uniforms on (-1/2, 1/2).
fn spline_moments(nmax: usize) -> Vec<f64> {
    let single: Vec<f64> = (0..=nmax)
        .map(|j| if j % 2 == 0 { 0.5f64.powi(j as i32) / (j as f64 + 1.0) } else { 0.0 })
        .collect();
    let conv = |a: &[f64], b: &[f64]| -> Vec<f64> {
        (0..=nmax)
            .map(|n| {
                let mut acc = 0.0;
                let mut binom = 1.0;
                for j in 0..=n {
                    acc += binom * a[j] * b[n - j];
                    binom *= (n - j) as f64 / (j + 1) as f64;
                }
                acc
            })
            .collect()
    };
    let two = conv(&single, &single);
    conv(&two, &two)
}

/// Same quantity as [`spline_kernel_stencil`] from the binomial expansion in
/// `U/k`; accurate for `|k| >= 4`.
pub fn spline_kernel_series(s: f64, k: f64) -> f64 {
    let k = k.abs();
    let p = 1.0 + 2.0 * s;
    let mu = spline_moments(80);
    let mut coef = 1.0; // binom(-p, n)
    let mut sum = 0.0;
    let kp = k.powf(-p);
    for n in 0..80usize {
        if n > 0 {
            coef *= -(p + n as f64 - 1.0) / n as f64;
        }
        if n % 2 == 1 {
            continue;
        }
        let term = coef * mu[n] * kp * k.powi(-(n as i32));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `E|k + U|^{-1-2s}` choosing the well-conditioned evaluation.
pub fn spline_kernel(s: f64, k: f64) -> f64 {
    if k.abs() >= FAR_LAG as f64 {
        spline_kernel_series(s, k)
    } else {
        spline_kernel_stencil(s, k)
    }
}

/// `Q_m = ∫_0^1 w^m (1+w)^{-1-2s} dw` for m = 0, 1, 2.
pub fn duffy_q(s: f64) -> [f64; 3] {
    let p0 = pow_int(-2.0 * s, 1.0, 2.0);
    let p1 = pow_int(1.0 - 2.0 * s, 1.0, 2.0);
    let p2 = pow_int(2.0 - 2.0 * s, 1.0, 2.0);
    [p0, p1 - p0, p2 - 2.0 * p1 + p0]
}

/// `∬_{[0,h]^2} ξ^a η^b (ξ+η)^{-1-2s} dξ dη` for `a + b >= 1`.
pub fn corner_integral(s: f64, h: f64, a: u32, b: u32) -> f64 {
    let q = duffy_q(s);
    let d = (a + b) as f64 + 1.0 - 2.0 * s;
    h.powf(d) / d * (q[a as usize] + q[b as usize])
}
