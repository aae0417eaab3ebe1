//! Fractional deep networks: residual layers coupled to every earlier layer
//! through the L1 weights of the Caputo derivative, trained with BFGS and
//! used as surrogates inside a pCN sampler.
//!
//! With states `φ_1, …, φ_{L−1}`:
//!
//! ```text
//! φ_1 = σ(W_0 ξ + b_0)
//! φ_j = φ_{j−1} − Σ_{k=1}^{j−2} a_{j−1−k} (φ_{k+1} − φ_k) + τ^γ Γ(2−γ) σ(W_{j−1} φ_{j−1} + b_{j−1})
//! y   = W_{L−1} φ_{L−1}
//! ```
//!
//! The history starts at φ_1, the first state of hidden width.

use std::path::Path;

use crate::caputo::{l1_weights, solve_fivp, TimeGrid};
use crate::optim::{bfgs_minimize, BfgsOptions, BoxConstraints, OptimResult};
use crate::rng::Rng;
use crate::specialfn::gamma_fn;
use crate::{io, Error, Result, TimeOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

impl Activation {
    fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdnnConfig {
    /// layer count L ≥ 3
    pub layers: usize,
    pub width: usize,
    pub in_dim: usize,
    pub out_dim: usize,
    pub gamma: TimeOrder,
    pub tau: f64,
    pub activation: Activation,
    /// Tikhonov weight on all parameters
    pub lambda: f64,
}

impl FdnnConfig {
    /// Configuration with the default step `τ = 1/(L−2)`.
    pub fn new(layers: usize, width: usize, in_dim: usize, out_dim: usize, gamma: f64) -> Result<Self> {
        let tau = if layers > 2 { 1.0 / (layers - 2) as f64 } else { 1.0 };
        let cfg = FdnnConfig {
            layers,
            width,
            in_dim,
            out_dim,
            gamma: TimeOrder::new(gamma)?,
            tau,
            activation: Activation::Tanh,
            lambda: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers < 3 {
            return Err(Error::Invalid(format!("need at least 3 layers, got {}", self.layers)));
        }
        if self.width == 0 || self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::Invalid("network dimensions must be positive".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Invalid(format!("layer step must be positive, got {}", self.tau)));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Invalid(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        Ok(())
    }

    /// `(rows, cols, has_bias)` of each weight block in declaration order.
    fn blocks(&self) -> Vec<(usize, usize, bool)> {
        let mut out = vec![(self.width, self.in_dim, true)];
        out.extend((1..self.layers - 1).map(|_| (self.width, self.width, true)));
        out.push((self.out_dim, self.width, false));
        out
    }

    pub fn n_params(&self) -> usize {
        self.blocks().iter().map(|(r, c, b)| r * c + if *b { *r } else { 0 }).sum()
    }

    fn step_constant(&self) -> Result<f64> {
        let g = self.gamma.get();
        Ok(self.tau.powf(g) * gamma_fn(2.0 - g)?)
    }
}

/// Flat parameter vector laid out as `W_0, b_0, W_1, b_1, …, W_{L−1}`,
/// matrices row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FdnnParams {
    pub data: Vec<f64>,
    offsets: Vec<(usize, usize)>,
}

impl FdnnParams {
    pub fn zeros(cfg: &FdnnConfig) -> Self {
        Self::from_vec(cfg, vec![0.0; cfg.n_params()]).expect("length matches")
    }

    pub fn from_vec(cfg: &FdnnConfig, data: Vec<f64>) -> Result<Self> {
        if data.len() != cfg.n_params() {
            return Err(Error::DimensionMismatch { expected: cfg.n_params(), got: data.len() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("parameters must be finite".into()));
        }
        let mut offsets = Vec::new();
        let mut pos = 0;
        for (r, c, b) in cfg.blocks() {
            let w = pos;
            pos += r * c;
            let bias = pos;
            if b {
                pos += r;
            }
            offsets.push((w, bias));
        }
        Ok(FdnnParams { data, offsets })
    }

    /// Gaussian entries with standard deviation `1/√width`.
    pub fn random(cfg: &FdnnConfig, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let sd = 1.0 / (cfg.width as f64).sqrt();
        Self::from_vec(cfg, (0..cfg.n_params()).map(|_| sd * rng.normal()).collect()).expect("finite")
    }

    /// Offset of the weight block `j`.
    pub fn w_offset(&self, j: usize) -> usize {
        self.offsets[j].0
    }

    /// Offset of the bias block `j` (`j < L−1`).
    pub fn b_offset(&self, j: usize) -> usize {
        self.offsets[j].1
    }

    /// Writes the binary checkpoint: a 32-byte header (magic `FDNN0001`,
    /// L, width, in_dim, out_dim as little-endian u16, γ and τ as
    /// little-endian f64) followed by the flat parameters as f64.
    pub fn save(&self, cfg: &FdnnConfig, path: &Path) -> Result<()> {
        let mut out = Vec::with_capacity(32 + 8 * self.data.len());
        out.extend_from_slice(b"FDNN0001");
        for d in [cfg.layers, cfg.width, cfg.in_dim, cfg.out_dim] {
            let d = u16::try_from(d).map_err(|_| Error::Invalid(format!("dimension {d} exceeds the checkpoint format")))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.extend_from_slice(&cfg.gamma.get().to_le_bytes());
        out.extend_from_slice(&cfg.tau.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    /// Reads a checkpoint written by [`FdnnParams::save`]; λ is not stored
    /// and comes back as 0.
    pub fn load(path: &Path) -> Result<(FdnnConfig, FdnnParams)> {
        let bytes = std::fs::read(path)?;
        let bad = |m: &str| Error::Invalid(format!("{}: {m}", path.display()));
        if bytes.len() < 32 || &bytes[..8] != b"FDNN0001" {
            return Err(bad("not an fdnn checkpoint"));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]) as usize;
        let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
        let mut cfg = FdnnConfig::new(u16_at(8), u16_at(10), u16_at(12), u16_at(14), f64_at(16))?;
        cfg.tau = f64_at(24);
        cfg.validate()?;
        let body = &bytes[32..];
        if body.len() != 8 * cfg.n_params() {
            return Err(bad("parameter block has the wrong length"));
        }
        let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok((cfg, FdnnParams::from_vec(&cfg, data)?))
    }
}

fn matvec_add(w: &[f64], rows: usize, cols: usize, x: &[f64], bias: Option<&[f64]>) -> Vec<f64> {
    (0..rows)
        .map(|r| {
            let mut acc = bias.map_or(0.0, |b| b[r]);
            for c in 0..cols {
                acc += w[r * cols + c] * x[c];
            }
            acc
        })
        .collect()
}

/// Forward pass record: pre-activations `z_j` and states `φ_j`, both
/// indexed from 1 (slot 0 is unused).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub output: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub pre: Vec<Vec<f64>>,
}

/// Optional perturbation added to `φ_layer` right after it is formed.
#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub layer: usize,
    pub delta: Vec<f64>,
}

/// History term `Σ_{k=1}^{j−2} a_{j−1−k}(φ_{k+1} − φ_k)` for layer `j`.
pub fn history_term(states: &[Vec<f64>], a: &[f64], j: usize) -> Vec<f64> {
    let width = states[1].len();
    let mut hist = vec![0.0; width];
    for k in 1..j.saturating_sub(1) {
        let w = a[j - 1 - k];
        for (i, h) in hist.iter_mut().enumerate() {
            *h += w * (states[k + 1][i] - states[k][i]);
        }
    }
    hist
}

pub fn forward_with(
    params: &FdnnParams,
    cfg: &FdnnConfig,
    xi: &[f64],
    injection: Option<&Injection>,
) -> Result<ForwardPass> {
    if xi.len() != cfg.in_dim {
        return Err(Error::DimensionMismatch { expected: cfg.in_dim, got: xi.len() });
    }
    if params.data.len() != cfg.n_params() {
        return Err(Error::DimensionMismatch { expected: cfg.n_params(), got: params.data.len() });
    }
    let l = cfg.layers;
    let n = cfg.width;
    let act = cfg.activation;
    let a = l1_weights(cfg.gamma, l).a;
    let c = cfg.step_constant()?;
    let p = &params.data;
    let mut states = vec![Vec::new(); l];
    let mut pre = vec![Vec::new(); l];
    let inject = |j: usize, v: &mut Vec<f64>| {
        if let Some(inj) = injection {
            if inj.layer == j {
                for (x, d) in v.iter_mut().zip(&inj.delta) {
                    *x += d;
                }
            }
        }
    };
    let (w0, b0) = (params.w_offset(0), params.b_offset(0));
    pre[1] = matvec_add(&p[w0..], n, cfg.in_dim, xi, Some(&p[b0..b0 + n]));
    states[1] = pre[1].iter().map(|&z| act.eval(z)).collect();
    inject(1, &mut states[1]);
    for j in 2..l {
        let (wo, bo) = (params.w_offset(j - 1), params.b_offset(j - 1));
        pre[j] = matvec_add(&p[wo..], n, n, &states[j - 1], Some(&p[bo..bo + n]));
        let hist = history_term(&states, &a, j);
        let mut next: Vec<f64> = (0..n).map(|i| states[j - 1][i] - hist[i] + c * act.eval(pre[j][i])).collect();
        inject(j, &mut next);
        states[j] = next;
    }
    let wl = params.w_offset(l - 1);
    let output = matvec_add(&p[wl..], cfg.out_dim, n, &states[l - 1], None);
    Ok(ForwardPass { output, states, pre })
}

pub fn forward(params: &FdnnParams, cfg: &FdnnConfig, xi: &[f64]) -> Result<Vec<f64>> {
    Ok(forward_with(params, cfg, xi, None)?.output)
}

/// Parameters and solutions, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
}

impl SnapshotSet {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::DimensionMismatch { expected: inputs.len(), got: outputs.len() });
        }
        if inputs.is_empty() {
            return Err(Error::Invalid("snapshot set is empty".into()));
        }
        for rows in [&inputs, &outputs] {
            let d = rows[0].len();
            if let Some(r) = rows.iter().find(|r| r.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
        }
        Ok(SnapshotSet { inputs, outputs })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// `J = (1/2N) Σ ‖y(ξ_i) − u_i‖² + (λ/2)‖θ‖²` and its gradient by a reverse
/// sweep through the layer recursion, including every history coupling.
pub fn loss_and_gradient(params: &FdnnParams, cfg: &FdnnConfig, data: &SnapshotSet) -> Result<(f64, Vec<f64>)> {
    if data.outputs[0].len() != cfg.out_dim {
        return Err(Error::DimensionMismatch { expected: cfg.out_dim, got: data.outputs[0].len() });
    }
    let l = cfg.layers;
    let n = cfg.width;
    let act = cfg.activation;
    let a = l1_weights(cfg.gamma, l).a;
    let c = cfg.step_constant()?;
    let p = &params.data;
    let inv_n = 1.0 / data.len() as f64;
    let mut grad = vec![0.0; p.len()];
    let mut loss = 0.0;
    for (xi, target) in data.inputs.iter().zip(&data.outputs) {
        let fp = forward_with(params, cfg, xi, None)?;
        let r: Vec<f64> = fp.output.iter().zip(target).map(|(y, t)| y - t).collect();
        loss += 0.5 * inv_n * r.iter().map(|v| v * v).sum::<f64>();
        let wl = params.w_offset(l - 1);
        let mut adj = vec![vec![0.0; n]; l];
        for o in 0..cfg.out_dim {
            let ro = inv_n * r[o];
            for i in 0..n {
                grad[wl + o * n + i] += ro * fp.states[l - 1][i];
                adj[l - 1][i] += p[wl + o * n + i] * ro;
            }
        }
        for j in (2..l).rev() {
            let lam = adj[j].clone();
            // direct carry φ_{j−1}
            for i in 0..n {
                adj[j - 1][i] += lam[i];
            }
            // history: −Σ a_{j−1−k}(φ_{k+1} − φ_k)
            for k in 1..j - 1 {
                let w = a[j - 1 - k];
                for i in 0..n {
                    adj[k + 1][i] -= w * lam[i];
                    adj[k][i] += w * lam[i];
                }
            }
            let (wo, bo) = (params.w_offset(j - 1), params.b_offset(j - 1));
            for row in 0..n {
                let d = c * act.derivative(fp.pre[j][row]) * lam[row];
                grad[bo + row] += d;
                for col in 0..n {
                    grad[wo + row * n + col] += d * fp.states[j - 1][col];
                    adj[j - 1][col] += p[wo + row * n + col] * d;
                }
            }
        }
        let (w0, b0) = (params.w_offset(0), params.b_offset(0));
        for row in 0..n {
            let d = act.derivative(fp.pre[1][row]) * adj[1][row];
            grad[b0 + row] += d;
            for col in 0..cfg.in_dim {
                grad[w0 + row * cfg.in_dim + col] += d * xi[col];
            }
        }
    }
    if cfg.lambda > 0.0 {
        loss += 0.5 * cfg.lambda * p.iter().map(|v| v * v).sum::<f64>();
        for (g, v) in grad.iter_mut().zip(p) {
            *g += cfg.lambda * v;
        }
    }
    Ok((loss, grad))
}

/// Outcome of [`train`].
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: FdnnParams,
    pub optim: OptimResult,
}

impl TrainResult {
    pub fn write_log_csv(&self, path: &Path) -> Result<()> {
        self.optim.write_log_csv(path)
    }
}

/// Full-batch BFGS from a seeded random initialization. With a basis the
/// targets are the reduced coefficients `Bᵀu_i`.
pub fn train(
    cfg: &FdnnConfig,
    data: &SnapshotSet,
    basis: Option<&ReducedBasis>,
    seed: u64,
    opts: &BfgsOptions,
) -> Result<TrainResult> {
    cfg.validate()?;
    let reduced;
    let data = match basis {
        Some(b) => {
            reduced = SnapshotSet::new(data.inputs.clone(), data.outputs.iter().map(|u| b.project(u)).collect())?;
            &reduced
        }
        None => data,
    };
    let init = FdnnParams::random(cfg, seed);
    let template = init.clone();
    let objective = |theta: &[f64]| {
        let mut p = template.clone();
        p.data.copy_from_slice(theta);
        loss_and_gradient(&p, cfg, data)
    };
    let res = bfgs_minimize(objective, &init.data, &BoxConstraints::unbounded(cfg.n_params()), opts)?;
    let params = FdnnParams::from_vec(cfg, res.x.clone())?;
    Ok(TrainResult { params, optim: res })
}

/// Orthonormal basis of the leading left singular vectors of the snapshot
/// matrix (columns = solutions).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    /// `rank` vectors of length N_x
    pub vectors: Vec<Vec<f64>>,
    /// all singular values, nonincreasing
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

impl ReducedBasis {
    /// Coefficients `Bᵀu`.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|b| b.iter().zip(u).map(|(x, y)| x * y).sum()).collect()
    }

    /// `B c`.
    pub fn expand(&self, coeffs: &[f64]) -> Vec<f64> {
        let nx = self.vectors[0].len();
        let mut out = vec![0.0; nx];
        for (b, c) in self.vectors.iter().zip(coeffs) {
            for (o, x) in out.iter_mut().zip(b) {
                *o += c * x;
            }
        }
        out
    }

    /// Fraction `Σ_{i≤r} σ_i² / Σ σ_i²`.
    pub fn energy_ratio(&self) -> f64 {
        let total: f64 = self.singular_values.iter().map(|s| s * s).sum();
        let kept: f64 = self.singular_values[..self.rank].iter().map(|s| s * s).sum();
        if total == 0.0 {
            1.0
        } else {
            kept / total
        }
    }

    /// Basis vectors as columns `b_0,…` (one row per entry) and the
    /// singular values as a single `sigma` column.
    pub fn write_csv(&self, basis_path: &Path, sigma_path: &Path) -> Result<()> {
        let header: Vec<String> = (0..self.rank).map(|k| format!("b_{k}")).collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let nx = self.vectors[0].len();
        let rows: Vec<Vec<f64>> = (0..nx).map(|i| self.vectors.iter().map(|b| b[i]).collect()).collect();
        io::write_csv(basis_path, &header, &rows)?;
        let sig: Vec<Vec<f64>> = self.singular_values.iter().map(|s| vec![*s]).collect();
        io::write_csv(sigma_path, &["sigma"], &sig)
    }

    pub fn read_csv(basis_path: &Path, sigma_path: &Path) -> Result<Self> {
        let (header, rows) = io::read_csv(basis_path)?;
        let rank = header.len();
        if rank == 0 || rows.is_empty() {
            return Err(Error::Invalid(format!("{}: empty basis", basis_path.display())));
        }
        let vectors = (0..rank).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
        let (_, sig) = io::read_csv(sigma_path)?;
        let singular_values: Vec<f64> = sig.iter().map(|r| r[0]).collect();
        if singular_values.len() < rank {
            return Err(Error::DimensionMismatch { expected: rank, got: singular_values.len() });
        }
        Ok(ReducedBasis { vectors, singular_values, rank })
    }

    /// `max |BᵀB − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                worst = worst.max((d - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }
}

/// Rank-r POD basis by one-sided Jacobi rotations on the snapshot columns,
/// which diagonalizes the N_s×N_s Gram matrix without forming it (small
/// singular values keep full relative accuracy). The kept vectors are then
/// re-orthonormalized by two passes of modified Gram–Schmidt.
pub fn svd_reduce(snapshots: &SnapshotSet, rank: usize) -> Result<ReducedBasis> {
    let ns = snapshots.len();
    let nx = snapshots.outputs[0].len();
    if ns < 2 {
        return Err(Error::Invalid("svd reduction needs at least 2 snapshots".into()));
    }
    if rank == 0 || rank > ns.min(nx) {
        return Err(Error::Invalid(format!("rank must lie in 1..={}, got {rank}", ns.min(nx))));
    }
    let mut cols: Vec<Vec<f64>> = snapshots.outputs.clone();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // columns pushed into the numerical null space only carry roundoff
    let floor = 1e-28 * cols.iter().map(|c| dot(c, c)).sum::<f64>();
    for sweep in 0..100 {
        let mut rotated = false;
        for i in 0..ns {
            for j in i + 1..ns {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let g = dot(&cols[i], &cols[j]);
                if g.abs() <= 1e-15 * (alpha * beta).sqrt() || g.abs() <= floor {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (lo, hi) = cols.split_at_mut(j);
                for (x, y) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
                    let (xi, yj) = (*x, *y);
                    *x = cs * xi - sn * yj;
                    *y = sn * xi + cs * yj;
                }
            }
        }
        if !rotated {
            break;
        }
        if sweep == 99 {
            return Err(Error::NonConvergence("Jacobi sweeps did not converge".into()));
        }
    }
    let mut sv: Vec<(f64, usize)> = cols.iter().enumerate().map(|(k, c)| (dot(c, c).sqrt(), k)).collect();
    sv.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite norms"));
    let singular_values: Vec<f64> = sv.iter().map(|p| p.0).take(ns.min(nx)).collect();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(rank);
    for &(s, k) in sv.iter().take(rank) {
        if s == 0.0 {
            return Err(Error::Invalid(format!("rank {rank} exceeds the snapshot rank")));
        }
        vectors.push(cols[k].iter().map(|v| v / s).collect());
    }
    for _ in 0..2 {
        for i in 0..vectors.len() {
            for j in 0..i {
                let d = dot(&vectors[i], &vectors[j]);
                let vj = vectors[j].clone();
                for (x, y) in vectors[i].iter_mut().zip(&vj) {
                    *x -= d * y;
                }
            }
            let nrm = dot(&vectors[i], &vectors[i]).sqrt();
            vectors[i].iter_mut().for_each(|x| *x /= nrm);
        }
    }
    Ok(ReducedBasis { vectors, singular_values, rank })
}

/// Trained network composed with an optional reduced basis.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub cfg: FdnnConfig,
    pub params: FdnnParams,
    pub basis: Option<ReducedBasis>,
}

impl Surrogate {
    pub fn eval(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let y = forward(&self.params, &self.cfg, xi)?;
        Ok(match &self.basis {
            Some(b) => b.expand(&y),
            None => y,
        })
    }

    /// `‖Ĝ − G‖ / ‖G‖` aggregated over a validation set.
    pub fn relative_error(&self, data: &SnapshotSet) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, u) in data.inputs.iter().zip(&data.outputs) {
            let y = self.eval(x)?;
            num += y.iter().zip(u).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            den += u.iter().map(|b| b * b).sum::<f64>();
        }
        Ok((num / den.max(f64::MIN_POSITIVE)).sqrt())
    }
}

// ---------------------------------------------------------------------------
// pCN sampling

#[derive(Debug, Clone, PartialEq)]
pub struct PcnResult {
    pub chain: Vec<Vec<f64>>,
    pub accepted: usize,
    pub acceptance_rate: f64,
}

impl PcnResult {
    /// Chain dump with columns `step,xi_0,…`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let d = self.chain.first().map_or(0, |x| x.len());
        let mut header = vec!["step".to_string()];
        header.extend((0..d).map(|i| format!("xi_{i}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<f64>> = self
            .chain
            .iter()
            .enumerate()
            .map(|(k, x)| std::iter::once(k as f64).chain(x.iter().copied()).collect())
            .collect();
        io::write_csv(path, &header, &rows)
    }

    /// Mean of component `c` and its batch-means standard error.
    pub fn mean_and_se(&self, c: usize, batches: usize) -> (f64, f64) {
        let xs: Vec<f64> = self.chain.iter().map(|x| x[c]).collect();
        batch_means(&xs, batches)
    }
}

/// Sample mean and batch-means standard error of a correlated series.
pub fn batch_means(xs: &[f64], batches: usize) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let size = n / batches.max(2);
    let b = n / size.max(1);
    let bm: Vec<f64> = (0..b).map(|k| xs[k * size..(k + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let mb = bm.iter().sum::<f64>() / b as f64;
    let var = bm.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// Settings of a pCN run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcnConfig {
    pub noise_sigma: f64,
    pub prior_sigma: f64,
    pub beta: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// pCN Metropolis chain for a centred Gaussian prior `N(0, σ_p² I)`:
/// proposal `ξ' = √(1−β²) ξ + β w`, `w` from the prior, accepted with
/// probability `min(1, exp(Φ(ξ) − Φ(ξ')))`, `Φ(ξ) = ‖y − G(ξ)‖²/(2σ²)`.
/// The chain starts at `xi0` and records every state after each step.
pub fn pcn_sample<G>(mut forward: G, y: &[f64], xi0: &[f64], cfg: &PcnConfig) -> Result<PcnResult>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(cfg.beta > 0.0 && cfg.beta <= 1.0) {
        return Err(Error::Invalid(format!("beta must lie in (0, 1], got {}", cfg.beta)));
    }
    if !(cfg.noise_sigma > 0.0 && cfg.prior_sigma > 0.0) {
        return Err(Error::Invalid("noise and prior scales must be positive".into()));
    }
    let mut misfit = |xi: &[f64]| -> Result<f64> {
        let g = forward(xi)?;
        if g.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: y.len(), got: g.len() });
        }
        Ok(g.iter().zip(y).map(|(a, b)| (b - a).powi(2)).sum::<f64>() / (2.0 * cfg.noise_sigma * cfg.noise_sigma))
    };
    let mut rng = Rng::new(cfg.seed);
    let shrink = (1.0 - cfg.beta * cfg.beta).sqrt();
    let mut xi = xi0.to_vec();
    let mut phi = misfit(&xi)?;
    let mut chain = Vec::with_capacity(cfg.n_samples);
    let mut accepted = 0;
    for _ in 0..cfg.n_samples {
        let prop: Vec<f64> = xi.iter().map(|x| shrink * x + cfg.beta * cfg.prior_sigma * rng.normal()).collect();
        let phi_p = misfit(&prop)?;
        let log_ratio = phi - phi_p;
        let u = rng.uniform();
        if log_ratio >= 0.0 || u < log_ratio.exp() {
            xi = prop;
            phi = phi_p;
            accepted += 1;
        }
        chain.push(xi.clone());
    }
    Ok(PcnResult { chain, accepted, acceptance_rate: accepted as f64 / cfg.n_samples.max(1) as f64 })
}

// ---------------------------------------------------------------------------
// Caputo toy inverse problem

/// Parameter-to-trajectory map `ξ ↦ u(·; r(ξ))` for `∂_t^γ u = −r u`,
/// `u(0) = u0`, with `r(ξ) = r_min + (r_max − r_min)·logistic(ξ)` so that a
/// standard Gaussian prior on ξ covers the rate range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaputoToy {
    pub gamma: TimeOrder,
    pub t_final: f64,
    pub n_steps: usize,
    pub u0: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for CaputoToy {
    fn default() -> Self {
        CaputoToy {
            gamma: TimeOrder::new(0.5).expect("valid order"),
            t_final: 1.0,
            n_steps: 50,
            u0: 1.0,
            r_min: 1.0,
            r_max: 8.0,
        }
    }
}

impl CaputoToy {
    pub fn rate(&self, xi: f64) -> f64 {
        self.r_min + (self.r_max - self.r_min) / (1.0 + (-xi).exp())
    }

    /// Trajectory at all time nodes for the decay rate `r`.
    pub fn trajectory_for_rate(&self, r: f64) -> Result<Vec<f64>> {
        let grid = TimeGrid::new(self.t_final, self.n_steps)?;
        let traj = solve_fivp(|u| vec![-r * u[0]], &[self.u0], grid, self.gamma)?;
        Ok(traj.component(0))
    }

    pub fn trajectory(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.trajectory_for_rate(self.rate(xi[0]))
    }

    /// Snapshots at the given parameters.
    pub fn snapshots(&self, xis: &[f64]) -> Result<SnapshotSet> {
        let outputs = xis.iter().map(|&x| self.trajectory(&[x])).collect::<Result<Vec<_>>>()?;
        SnapshotSet::new(xis.iter().map(|&x| vec![x]).collect(), outputs)
    }
}

/// Settings of the surrogate-versus-full pCN comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateStudy {
    pub toy: CaputoToy,
    pub n_train: usize,
    pub n_valid: usize,
    pub rank: usize,
    pub layers: usize,
    pub width: usize,
    pub gamma_net: f64,
    pub max_iter: usize,
    pub xi_true: f64,
    /// observe every `obs_stride`-th time node after t = 0
    pub obs_stride: usize,
    pub pcn: PcnConfig,
    pub seed: u64,
}

impl Default for SurrogateStudy {
    fn default() -> Self {
        SurrogateStudy {
            toy: CaputoToy::default(),
            n_train: 100,
            n_valid: 20,
            rank: 10,
            layers: 4,
            width: 10,
            gamma_net: 0.5,
            max_iter: 3000,
            xi_true: 0.5,
            obs_stride: 5,
            pcn: PcnConfig { noise_sigma: 0.01, prior_sigma: 1.0, beta: 0.3, n_samples: 20_000, seed: 7 },
            seed: 42,
        }
    }
}

/// Trained POD surrogate with its diagnostics.
#[derive(Debug, Clone)]
pub struct TrainedSurrogate {
    pub surrogate: Surrogate,
    pub train: TrainResult,
    pub validation_error: f64,
    pub energy_ratio: f64,
}

/// Snapshot generation on equispaced ξ ∈ [−3, 3], POD of rank `rank`, and
/// fDNN training on the reduced coefficients; validated on ξ drawn from
/// the prior.
pub fn build_surrogate(study: &SurrogateStudy) -> Result<TrainedSurrogate> {
    if study.n_train < 2 || study.n_valid == 0 {
        return Err(Error::Invalid("need at least 2 training and 1 validation sample".into()));
    }
    let toy = study.toy;
    let mut rng = Rng::new(study.seed);
    let train_xi: Vec<f64> =
        (0..study.n_train).map(|k| -3.0 + 6.0 * k as f64 / (study.n_train - 1) as f64).collect();
    let valid_xi: Vec<f64> = (0..study.n_valid).map(|_| rng.normal().clamp(-3.0, 3.0)).collect();
    let train_set = toy.snapshots(&train_xi)?;
    let valid_set = toy.snapshots(&valid_xi)?;
    let basis = svd_reduce(&train_set, study.rank)?;
    let cfg = FdnnConfig::new(study.layers, study.width, 1, study.rank, study.gamma_net)?;
    let train_res = train(&cfg, &train_set, Some(&basis), study.seed, &BfgsOptions::with_tol(1e-9, study.max_iter))?;
    let energy_ratio = basis.energy_ratio();
    let surrogate = Surrogate { cfg, params: train_res.params.clone(), basis: Some(basis) };
    let validation_error = surrogate.relative_error(&valid_set)?;
    Ok(TrainedSurrogate { surrogate, train: train_res, validation_error, energy_ratio })
}

/// Full-solver and surrogate chains on the same noisy observations, with
/// the same proposal seed.
#[derive(Debug, Clone)]
pub struct PcnComparison {
    pub full: PcnResult,
    pub reduced: PcnResult,
    pub observations: Vec<f64>,
}

impl PcnComparison {
    pub fn acceptance_gap(&self) -> f64 {
        (self.full.acceptance_rate - self.reduced.acceptance_rate).abs()
    }
}

/// Observes the trajectory at `ξ_true` every `obs_stride` nodes with
/// Gaussian noise (drawn from `noise_seed`) and runs both chains from ξ = 0.
pub fn compare_pcn(
    toy: &CaputoToy,
    surrogate: &Surrogate,
    xi_true: f64,
    obs_stride: usize,
    pcn: &PcnConfig,
    noise_seed: u64,
) -> Result<PcnComparison> {
    let stride = obs_stride.max(1);
    let select = |u: &[f64]| -> Vec<f64> { u.iter().skip(stride).step_by(stride).copied().collect() };
    let truth = select(&toy.trajectory(&[xi_true])?);
    let mut rng = Rng::new(noise_seed);
    let observations: Vec<f64> = truth.iter().map(|v| v + pcn.noise_sigma * rng.normal()).collect();
    let xi0 = [0.0];
    let full = pcn_sample(|xi| toy.trajectory(xi).map(|u| select(&u)), &observations, &xi0, pcn)?;
    let reduced = pcn_sample(|xi| surrogate.eval(xi).map(|u| select(&u)), &observations, &xi0, pcn)?;
    Ok(PcnComparison { full, reduced, observations })
}

/// [`build_surrogate`] followed by [`compare_pcn`].
pub fn surrogate_study(study: &SurrogateStudy) -> Result<(TrainedSurrogate, PcnComparison)> {
    let trained = build_surrogate(study)?;
    let cmp = compare_pcn(&study.toy, &trained.surrogate, study.xi_true, study.obs_stride, &study.pcn, study.seed ^ 1)?;
    Ok((trained, cmp))
}

/// Outcome of [`endpoint_map_study`].
#[derive(Debug, Clone)]
pub struct EndpointReport {
    pub surrogate: Surrogate,
    pub train: TrainResult,
    pub validation_error: f64,
    pub valid: SnapshotSet,
}

/// Learns the scalar map `r ↦ u(T; r)` of the toy problem directly in
/// the rate, from `n_train` equispaced rates in `[r_min, r_max]`, and
/// reports the relative error on `n_valid` uniformly drawn held-out rates.
pub fn endpoint_map_study(
    toy: &CaputoToy,
    n_train: usize,
    n_valid: usize,
    cfg: &FdnnConfig,
    seed: u64,
    opts: &BfgsOptions,
) -> Result<EndpointReport> {
    if cfg.in_dim != 1 || cfg.out_dim != 1 {
        return Err(Error::Invalid("the endpoint map is scalar to scalar".into()));
    }
    if n_train < 2 || n_valid == 0 {
        return Err(Error::Invalid("need at least 2 training and 1 validation sample".into()));
    }
    let endpoint = |r: f64| -> Result<Vec<f64>> { Ok(vec![*toy.trajectory_for_rate(r)?.last().expect("nonempty")]) };
    let span = toy.r_max - toy.r_min;
    let train_r: Vec<f64> = (0..n_train).map(|k| toy.r_min + span * k as f64 / (n_train - 1) as f64).collect();
    let mut rng = Rng::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    let valid_r: Vec<f64> = (0..n_valid).map(|_| toy.r_min + span * rng.uniform()).collect();
    let build = |rs: &[f64]| -> Result<SnapshotSet> {
        SnapshotSet::new(rs.iter().map(|&r| vec![r]).collect(), rs.iter().map(|&r| endpoint(r)).collect::<Result<_>>()?)
    };
    let train_set = build(&train_r)?;
    let valid = build(&valid_r)?;
    let train_res = train(cfg, &train_set, None, seed, opts)?;
    let surrogate = Surrogate { cfg: *cfg, params: train_res.params.clone(), basis: None };
    let validation_error = surrogate.relative_error(&valid)?;
    Ok(EndpointReport { surrogate, train: train_res, validation_error, valid })
}
