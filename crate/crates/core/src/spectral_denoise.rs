//! Fractional denoising on periodic grids: the minimizer of
//! `½‖(−Δ)^{s/2}u‖² + (λ/2)‖u − f‖²` is the Fourier multiplier
//! `û = λ f̂ / (|ξ|^{2s} + λ)`.

use std::path::Path;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::rng::Rng;
use crate::{io, Error, FracOrder, Result};

/// Real image on a periodic rectangle, stored row-major (`height` rows of
/// `width` pixels). Pixel `(i, j)` sits at `(j L_x / W, i L_y / H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicImage {
    pub width: usize,
    pub height: usize,
    pub lx: f64,
    pub ly: f64,
    pub data: Vec<f64>,
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    for (name, n) in [("width", width), ("height", height)] {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Invalid(format!("{name} must be a power of two >= 8, got {n}")));
        }
    }
    Ok(())
}

impl PeriodicImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, got: data.len() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("image contains non-finite pixels".into()));
        }
        Ok(PeriodicImage { width, height, lx: 1.0, ly: 1.0, data })
    }

    /// Samples `f(x, y)` on the unit periodic square.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                data.push(f(j as f64 / width as f64, i as f64 / height as f64));
            }
        }
        Self::new(width, height, data)
    }

    /// Same pixels on a domain of size `lx × ly`.
    pub fn with_lengths(mut self, lx: f64, ly: f64) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Invalid(format!("domain lengths must be positive, got {lx} x {ly}")));
        }
        self.lx = lx;
        self.ly = ly;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn same_shape(&self, other: &PeriodicImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch { expected: self.len(), got: other.len() });
        }
        Ok(())
    }

    fn map_data(&self, data: Vec<f64>) -> Self {
        PeriodicImage { data, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseConfig {
    pub s: FracOrder,
    pub lambda: f64,
}

impl DenoiseConfig {
    pub fn new(s: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(DenoiseConfig { s: FracOrder::new(s)?, lambda })
    }
}

/// Unnormalized 2D DFT coefficients, row-major like the image.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

fn transform(width: usize, height: usize, data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (row, col) = if inverse {
        (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
    } else {
        (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
    };
    row.process(data);
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for j in 0..width {
        for i in 0..height {
            column[i] = data[i * width + j];
        }
        col.process(&mut column);
        for i in 0..height {
            data[i * width + j] = column[i];
        }
    }
}

/// Forward transform `F(k, l) = Σ f(i, j) e^{−2πi(ki/H + lj/W)}`.
pub fn fft2(img: &PeriodicImage) -> Result<Spectrum> {
    check_dims(img.width, img.height)?;
    let mut data: Vec<Complex64> = img.data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(img.width, img.height, &mut data, false);
    Ok(Spectrum { width: img.width, height: img.height, data })
}

/// Inverse transform with the `1/(WH)` factor; returns the real part on the
/// unit square (callers restore domain lengths).
pub fn ifft2(spec: &Spectrum) -> Result<PeriodicImage> {
    check_dims(spec.width, spec.height)?;
    if spec.data.len() != spec.width * spec.height {
        return Err(Error::DimensionMismatch { expected: spec.width * spec.height, got: spec.data.len() });
    }
    let mut data = spec.data.clone();
    transform(spec.width, spec.height, &mut data, true);
    let scale = 1.0 / (spec.width * spec.height) as f64;
    PeriodicImage::new(spec.width, spec.height, data.iter().map(|c| c.re * scale).collect())
}

fn signed_freq(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// `|ξ|^{2s}` for every mode, `ξ = 2π(k_x/L_x, k_y/L_y)`; zero at DC.
pub fn symbol(img: &PeriodicImage, s: FracOrder) -> Vec<f64> {
    let (w, h) = (img.width, img.height);
    let mut out = Vec::with_capacity(w * h);
    for i in 0..h {
        let ky = 2.0 * std::f64::consts::PI * signed_freq(i, h) / img.ly;
        for j in 0..w {
            let kx = 2.0 * std::f64::consts::PI * signed_freq(j, w) / img.lx;
            let r2 = kx * kx + ky * ky;
            out.push(if r2 == 0.0 { 0.0 } else { r2.powf(s.get()) });
        }
    }
    out
}

/// Spectral solve of `((−Δ)ˢ + λ) u = λ f`.
pub fn denoise(f: &PeriodicImage, cfg: &DenoiseConfig) -> Result<PeriodicImage> {
    let mut spec = fft2(f)?;
    let sym = symbol(f, cfg.s);
    for (c, m) in spec.data.iter_mut().zip(&sym) {
        *c *= cfg.lambda / (m + cfg.lambda);
    }
    let u = ifft2(&spec)?;
    Ok(f.map_data(u.data))
}

/// Largest per-mode defect `|(|ξ|^{2s}+λ)û − λf̂|`, relative to `λ max|f̂|`.
pub fn euler_lagrange_residual(u: &PeriodicImage, f: &PeriodicImage, cfg: &DenoiseConfig) -> Result<f64> {
    u.same_shape(f)?;
    let (uh, fh) = (fft2(u)?, fft2(f)?);
    let sym = symbol(f, cfg.s);
    let scale = cfg.lambda * fh.data.iter().fold(0.0f64, |m, c| m.max(c.norm())).max(f64::MIN_POSITIVE);
    let worst = uh
        .data
        .iter()
        .zip(&fh.data)
        .zip(&sym)
        .fold(0.0f64, |m, ((a, b), k)| m.max((a * (k + cfg.lambda) - b * cfg.lambda).norm()));
    Ok(worst / scale)
}

/// `½‖(−Δ)^{s/2}u‖² + (λ/2)‖u − f‖²` in L² of the periodic domain, by
/// Parseval: `∫|g|² = L_x L_y/(WH)² Σ|ĝ|²`.
pub fn energy(u: &PeriodicImage, f: &PeriodicImage, cfg: &DenoiseConfig) -> Result<f64> {
    u.same_shape(f)?;
    let (uh, fh) = (fft2(u)?, fft2(f)?);
    let sym = symbol(u, cfg.s);
    let n = (u.width * u.height) as f64;
    let c = u.lx * u.ly / (n * n);
    let mut acc = 0.0;
    for ((a, b), k) in uh.data.iter().zip(&fh.data).zip(&sym) {
        acc += 0.5 * k * a.norm_sqr() + 0.5 * cfg.lambda * (a - b).norm_sqr();
    }
    Ok(c * acc)
}

/// Adds i.i.d. `N(0, σ²)` noise; deterministic per seed.
pub fn add_gaussian_noise(img: &PeriodicImage, sigma: f64, seed: u64) -> Result<PeriodicImage> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Invalid(format!("sigma must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = Rng::new(seed);
    Ok(img.map_data(img.data.iter().map(|v| v + sigma * rng.normal()).collect()))
}

pub fn mse(a: &PeriodicImage, b: &PeriodicImage) -> Result<f64> {
    a.same_shape(b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64)
}

/// Mean squared difference computed from the spectra, `Σ|â − b̂|²/(WH)²`.
pub fn spectral_mse(a: &PeriodicImage, b: &PeriodicImage) -> Result<f64> {
    a.same_shape(b)?;
    let (ah, bh) = (fft2(a)?, fft2(b)?);
    let n = a.len() as f64;
    Ok(ah.data.iter().zip(&bh.data).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>() / (n * n))
}

/// `10 log10(peak²/MSE)`; `f64::INFINITY` for identical images.
pub fn psnr(a: &PeriodicImage, b: &PeriodicImage, peak: f64) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

/// Smooth synthetic test image with two Gaussian blobs on a 0.3 background,
/// values in [0.3, 0.8].
pub fn phantom(width: usize, height: usize) -> Result<PeriodicImage> {
    PeriodicImage::from_fn(width, height, |x, y| {
        0.3 + 0.5 * (-((x - 0.4).powi(2) + (y - 0.5).powi(2)) / 0.02).exp()
            + 0.3 * (-((x - 0.7).powi(2) + (y - 0.3).powi(2)) / 0.005).exp()
    })
}

/// Binary PGM (P5, maxval 255); pixels are clamped to [0, 1] and rounded.
pub fn write_pgm(img: &PeriodicImage, path: &Path) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a binary PGM with maxval ≤ 255, scaling pixels to [0, 1].
pub fn read_pgm(path: &Path) -> Result<PeriodicImage> {
    let bytes = std::fs::read(path)?;
    let bad = |m: &str| Error::Invalid(format!("{}: {m}", path.display()));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad("not a binary PGM"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit PGM is supported"));
    }
    let pix = bytes.get(pos..pos + w * h).ok_or_else(|| bad("truncated pixel data"))?;
    PeriodicImage::new(w, h, pix.iter().map(|&b| b as f64 / maxval as f64).collect())
}

/// Lossless float sidecar with columns `row,col,value`.
pub fn write_image_csv(img: &PeriodicImage, path: &Path) -> Result<()> {
    let rows: Vec<Vec<f64>> = (0..img.len())
        .map(|k| vec![(k / img.width) as f64, (k % img.width) as f64, img.data[k]])
        .collect();
    io::write_csv(path, &["row", "col", "value"], &rows)
}

pub fn read_image_csv(path: &Path) -> Result<PeriodicImage> {
    let (_, rows) = io::read_csv(path)?;
    let h = rows.iter().map(|r| r[0] as usize + 1).max().unwrap_or(0);
    let w = rows.iter().map(|r| r[1] as usize + 1).max().unwrap_or(0);
    let mut data = vec![f64::NAN; w * h];
    for r in &rows {
        if r.len() != 3 {
            return Err(Error::Invalid(format!("{}: expected 3 columns", path.display())));
        }
        data[r[0] as usize * w + r[1] as usize] = r[2];
    }
    PeriodicImage::new(w, h, data)
}
