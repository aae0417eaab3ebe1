//! Subcommand configurations and pipelines.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use fracopt::caputo::{solve_fivp, TimeGrid};
use fracopt::control::{solve_exterior_control, ExteriorControlSpec, StateConstrainedProblem, StateConstrainedSpec};
use fracopt::fdnn::{self, CaputoToy, FdnnParams, PcnConfig, ReducedBasis, Surrogate, SurrogateStudy};
use fracopt::fraclap1d::{
    assemble_stiffness, l2_error, load_from_fn, solve_dirichlet, torsion_exact, Grid1D, RobinStudy,
};
use fracopt::optim::BfgsOptions;
use fracopt::specialfn::mittag_leffler;
use fracopt::spectral_denoise as sd;
use fracopt::{io, FracOrder, TimeOrder};

use crate::config::ConfigError;

/// Offsets fanning the master seed out to independent streams.
const SEED_NOISE: u64 = 1;
const SEED_CONTROL: u64 = 2;
const SEED_FDNN: u64 = 3;
const SEED_PCN: u64 = 4;
const SEED_OBS: u64 = 5;

pub struct Ctx {
    pub out: PathBuf,
    pub seed: u64,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

#[derive(Default)]
pub struct Outcome {
    pub metrics: Map<String, Value>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    fn metric(&mut self, key: &str, v: impl Serialize) {
        self.metrics.insert(key.to_string(), json!(v));
    }

    fn artifact(&mut self, p: PathBuf) {
        self.artifacts.push(p);
    }
}

#[derive(Debug)]
pub enum CmdError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CmdError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CmdError::Config(_) => 2,
            CmdError::Numerical(_) => 3,
            CmdError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Config(m) | CmdError::Numerical(m) | CmdError::Io(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Config(e.0)
    }
}

impl From<fracopt::Error> for CmdError {
    fn from(e: fracopt::Error) -> Self {
        match e {
            fracopt::Error::Io(_) => CmdError::Io(e.to_string()),
            _ if e.is_numerical() => CmdError::Numerical(e.to_string()),
            _ => CmdError::Config(e.to_string()),
        }
    }
}

fn write_json(path: &Path, v: &Value) -> Result<(), CmdError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CmdError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CmdError::Io(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaputoDemo {
    pub gamma: f64,
    pub rate: f64,
    pub u0: f64,
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
}

impl Default for CaputoDemo {
    fn default() -> Self {
        CaputoDemo { gamma: 0.5, rate: 4.0, u0: 0.5, tau: 0.005, t_final: 1.0 }
    }
}

pub fn caputo_demo(c: &CaputoDemo, ctx: &Ctx) -> Result<Outcome, CmdError> {
    let order = TimeOrder::new(c.gamma)?;
    let grid = TimeGrid::from_step(c.t_final, c.tau)?;
    let rate = c.rate;
    let traj = solve_fivp(|u| vec![-rate * u[0]], &[c.u0], grid, order)?;
    let mut rows = Vec::with_capacity(grid.n_steps + 1);
    let mut max_err: f64 = 0.0;
    for (j, u) in traj.states.iter().enumerate() {
        let t = grid.node(j);
        let exact = c.u0 * mittag_leffler(c.gamma, -rate * t.powf(c.gamma))?;
        max_err = max_err.max((u[0] - exact).abs());
        rows.push(vec![t, u[0], exact]);
    }
    let mut out = Outcome::default();
    let p = ctx.path("trajectory.csv");
    io::write_csv(&p, &["t", "numeric", "exact"], &rows)?;
    out.artifact(p);
    let last = rows.last().expect("at least one node");
    out.metric("steps", grid.n_steps);
    out.metric("max_error", max_err);
    out.metric("final_error", (last[1] - last[2]).abs());
    Ok(out)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Denoise {
    /// phantom side length in pixels (power of two)
    pub size: usize,
    /// clean image to use instead of the phantom
    pub input: Option<PathBuf>,
    pub s: f64,
    pub lambda: f64,
    pub sigma: f64,
    /// physical side length of the periodic cell
    pub length: f64,
}

impl Default for Denoise {
    fn default() -> Self {
        Denoise { size: 128, input: None, s: 0.42, lambda: 10.0, sigma: 0.02, length: 32.0 }
    }
}

pub fn denoise(c: &Denoise, ctx: &Ctx) -> Result<Outcome, CmdError> {
    let clean = match &c.input {
        Some(p) => {
            if !p.is_file() {
                return Err(CmdError::Config(format!("config error at `input`: no such file {}", p.display())));
            }
            sd::read_pgm(p)?
        }
        None => sd::phantom(c.size, c.size)?,
    }
    .with_lengths(c.length, c.length)?;
    let noisy = sd::add_gaussian_noise(&clean, c.sigma, ctx.seed + SEED_NOISE)?;
    let cfg = sd::DenoiseConfig::new(c.s, c.lambda)?;
    let u = sd::denoise(&noisy, &cfg)?;
    let p_noisy = sd::psnr(&clean, &noisy, 1.0)?;
    let p_den = sd::psnr(&clean, &u, 1.0)?;
    let mut out = Outcome::default();
    for (name, img) in [("clean.pgm", &clean), ("noisy.pgm", &noisy), ("denoised.pgm", &u)] {
        let p = ctx.path(name);
        sd::write_pgm(img, &p)?;
        out.artifact(p);
    }
    let p = ctx.path("denoised.csv");
    sd::write_image_csv(&u, &p)?;
    out.artifact(p);
    out.metric("psnr_noisy", p_noisy);
    out.metric("psnr_denoised", p_den);
    out.metric("gain_db", p_den - p_noisy);
    out.metric("euler_lagrange_residual", sd::euler_lagrange_residual(&u, &noisy, &cfg)?);
    Ok(out)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirichletSolve {
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub h: f64,
    /// constant source on Ω
    pub f: f64,
    /// exterior data `f·c_s (R² − x²)₊ˢ`, which is also the exact solution
    pub data_radius: f64,
}

impl Default for DirichletSolve {
    fn default() -> Self {
        DirichletSolve { s: 0.5, a: -1.0, b: 1.0, big_a: -2.0, big_b: 2.0, h: 1.0 / 32.0, f: 1.0, data_radius: 1.5 }
    }
}

pub fn dirichlet_solve(c: &DirichletSolve, ctx: &Ctx) -> Result<Outcome, CmdError> {
    if c.data_radius < c.a.abs().max(c.b.abs()) {
        return Err(CmdError::Config("config error at `data_radius`: must cover the domain".into()));
    }
    let g = Grid1D::new(c.a, c.b, c.big_a, c.big_b, c.h)?;
    let mat = assemble_stiffness(&g, FracOrder::new(c.s)?)?;
    let exact = |x: f64| c.f * torsion_exact(c.s, c.data_radius, x);
    let load = load_from_fn(&g, |_| c.f);
    let gx: Vec<f64> = g.exterior_nodes().iter().map(|&i| exact(g.x(i))).collect();
    let u = solve_dirichlet(&mat, &load, &gx)?;
    let mut out = Outcome::default();
    let p = ctx.path("solution.csv");
    u.write_csv(&p)?;
    out.artifact(p);
    out.metric("n_dof", g.n_dof());
    out.metric("l2_error", l2_error(&u, exact, g.omega_elements()));
    Ok(out)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobinStudyCfg {
    pub s: f64,
    pub h: f64,
    pub kappa: f64,
    pub n: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub data_radius: f64,
}

impl Default for RobinStudyCfg {
    fn default() -> Self {
        let d = RobinStudy::default();
        RobinStudyCfg {
            s: d.s,
            h: d.h,
            kappa: d.kappa,
            n: vec![1e2, 1e3, 1e4, 1e5],
            a: d.a,
            b: d.b,
            big_a: d.big_a,
            big_b: d.big_b,
            data_radius: d.data_radius,
        }
    }
}

pub fn robin_study(c: &RobinStudyCfg, ctx: &Ctx) -> Result<Outcome, CmdError> {
    let study = RobinStudy {
        a: c.a,
        b: c.b,
        big_a: c.big_a,
        big_b: c.big_b,
        h: c.h,
        s: c.s,
        kappa: c.kappa,
        data_radius: c.data_radius,
    };
    let rep = study.rate(&c.n)?;
    let mut out = Outcome::default();
    let p = ctx.path("rate.csv");
    rep.write_csv(&p)?;
    out.artifact(p);
    out.metric("slope", rep.slope);
    out.metric("errors", &rep.errors);
    out.metric("strictly_decreasing", rep.strictly_decreasing());
    Ok(out)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExteriorControlCfg {
    pub a: f64,
    pub b: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub h: f64,
    pub hat: [f64; 2],
    pub s: f64,
    pub n: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub z_true: f64,
    pub noise: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ExteriorControlCfg {
    fn default() -> Self {
        let d = ExteriorControlSpec::default();
        ExteriorControlCfg {
            a: d.a,
            b: d.b,
            big_a: d.big_a,
            big_b: d.big_b,
            h: d.h,
            hat: [d.hat.0, d.hat.1],
            s: d.s,
            n: d.n,
            kappa: d.kappa,
            lambda: d.lambda,
            z_true: d.z_true,
            noise: d.noise,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

pub fn exterior_control(c: &ExteriorControlCfg, ctx: &Ctx) -> Result<Outcome, CmdError> {
    let spec = ExteriorControlSpec {
        a: c.a,
        b: c.b,
        big_a: c.big_a,
        big_b: c.big_b,
        h: c.h,
        hat: (c.hat[0], c.hat[1]),
        s: c.s,
        n: c.n,
        kappa: c.kappa,
        lambda: c.lambda,
        z_true: c.z_true,
        noise: c.noise,
        seed: ctx.seed + SEED_CONTROL,
        tol: c.tol,
        max_iter: c.max_iter,
    };
    let (_, res) = solve_exterior_control(&spec)?;
    res.write_bundle(&ctx.out)?;
    let mut out = Outcome::default();
    for name in ["control.csv", "state.csv", "adjoint.csv", "kkt.json", "optim_log.csv"] {
        out.artifact(ctx.path(name));
    }
    let n = res.control.len().max(1) as f64;
    out.metric("control_mean", res.control.iter().sum::<f64>() / n);
    out.metric("control_max", res.control.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    out.metric("objective", res.objective);
    out.metric("iterations", res.optim.iterations);
    out.metric("pg_norm", res.optim.pg_norm);
    out.metric("converged", res.optim.converged());
    Ok(out)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateConstrainedCfg {
    pub a: f64,
    pub b: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub h: f64,
    pub s: f64,
    pub lambda: f64,
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

impl Default for StateConstrainedCfg {
    fn default() -> Self {
        let d = StateConstrainedSpec::default();
        StateConstrainedCfg {
            a: d.a,
            b: d.b,
            big_a: d.big_a,
            big_b: d.big_b,
            h: d.h,
            s: d.s,
            lambda: d.lambda,
            target_radius: d.target_radius,
            target_scale: d.target_scale,
            u_b: d.u_b,
            mu_hat: d.mu_hat,
            control_lo: d.control_lo,
            control_hi: d.control_hi,
            gamma0: d.gamma0,
            levels: d.levels,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

pub fn state_constrained(c: &StateConstrainedCfg, ctx: &Ctx) -> Result<Outcome, CmdError> {
    let spec = StateConstrainedSpec {
        a: c.a,
        b: c.b,
        big_a: c.big_a,
        big_b: c.big_b,
        h: c.h,
        s: c.s,
        lambda: c.lambda,
        target_radius: c.target_radius,
        target_scale: c.target_scale,
        u_b: c.u_b,
        mu_hat: c.mu_hat,
        control_lo: c.control_lo,
        control_hi: c.control_hi,
        gamma0: c.gamma0,
        levels: c.levels,
        tol: c.tol,
        max_iter: c.max_iter,
    };
    let prob = StateConstrainedProblem::from_spec(&spec)?;
    let sweep = prob.solve_schedule(&spec.schedule(), &BfgsOptions::with_tol(spec.tol, spec.max_iter))?;
    let mut out = Outcome::default();
    let p = ctx.path("gamma_sweep.csv");
    sweep.write_csv(&p)?;
    out.artifact(p);
    let last = sweep.levels.last().expect("nonempty schedule");
    last.write_bundle(&ctx.out)?;
    for name in ["control.csv", "state.csv", "adjoint.csv", "kkt.json", "optim_log.csv"] {
        out.artifact(ctx.path(name));
    }
    let slope = sweep.slope().ok();
    out.metric("slope", slope);
    out.metric("monotone", sweep.nonincreasing());
    out.metric("violations", sweep.violations());
    out.metric("final_objective", last.objective);
    Ok(out)
}

// ---------------------------------------------------------------------------

fn toy(gamma: f64, t_final: f64, n_steps: usize, u0: f64, r_min: f64, r_max: f64) -> Result<CaputoToy, CmdError> {
    if !(r_max > r_min) {
        return Err(CmdError::Config("config error at `r_max`: must exceed r_min".into()));
    }
    Ok(CaputoToy { gamma: TimeOrder::new(gamma)?, t_final, n_steps, u0, r_min, r_max })
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdnnTrainCfg {
    pub gamma: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub n_steps: usize,
    pub u0: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub n_train: usize,
    pub n_valid: usize,
    pub rank: usize,
    pub layers: usize,
    pub width: usize,
    pub gamma_net: f64,
    pub max_iter: usize,
}

impl Default for FdnnTrainCfg {
    fn default() -> Self {
        let d = SurrogateStudy::default();
        FdnnTrainCfg {
            gamma: d.toy.gamma.get(),
            t_final: d.toy.t_final,
            n_steps: d.toy.n_steps,
            u0: d.toy.u0,
            r_min: d.toy.r_min,
            r_max: d.toy.r_max,
            n_train: d.n_train,
            n_valid: d.n_valid,
            rank: d.rank,
            layers: d.layers,
            width: d.width,
            gamma_net: d.gamma_net,
            max_iter: d.max_iter,
        }
    }
}

pub fn fdnn_train(c: &FdnnTrainCfg, ctx: &Ctx) -> Result<Outcome, CmdError> {
    let study = SurrogateStudy {
        toy: toy(c.gamma, c.t_final, c.n_steps, c.u0, c.r_min, c.r_max)?,
        n_train: c.n_train,
        n_valid: c.n_valid,
        rank: c.rank,
        layers: c.layers,
        width: c.width,
        gamma_net: c.gamma_net,
        max_iter: c.max_iter,
        seed: ctx.seed + SEED_FDNN,
        ..SurrogateStudy::default()
    };
    let t = fdnn::build_surrogate(&study)?;
    let basis = t.surrogate.basis.as_ref().expect("POD surrogate");
    let mut out = Outcome::default();
    let params = ctx.path("params.bin");
    t.surrogate.params.save(&t.surrogate.cfg, &params)?;
    let (bp, sp) = (ctx.path("basis.csv"), ctx.path("sigma.csv"));
    basis.write_csv(&bp, &sp)?;
    let log = ctx.path("train_log.csv");
    t.train.write_log_csv(&log)?;
    out.artifacts.extend([params, bp, sp, log]);
    out.metric("validation_error", t.validation_error);
    out.metric("energy_ratio", t.energy_ratio);
    out.metric("final_loss", t.train.optim.value);
    out.metric("iterations", t.train.optim.iterations);
    Ok(out)
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdnnPcnCfg {
    /// output directory of a previous `fdnn-train` run
    pub checkpoint: Option<PathBuf>,
    pub gamma: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub n_steps: usize,
    pub u0: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub xi_true: f64,
    pub obs_stride: usize,
    pub noise_sigma: f64,
    pub prior_sigma: f64,
    pub beta: f64,
    pub n_samples: usize,
}

impl Default for FdnnPcnCfg {
    fn default() -> Self {
        let d = SurrogateStudy::default();
        FdnnPcnCfg {
            checkpoint: None,
            gamma: d.toy.gamma.get(),
            t_final: d.toy.t_final,
            n_steps: d.toy.n_steps,
            u0: d.toy.u0,
            r_min: d.toy.r_min,
            r_max: d.toy.r_max,
            xi_true: d.xi_true,
            obs_stride: d.obs_stride,
            noise_sigma: d.pcn.noise_sigma,
            prior_sigma: d.pcn.prior_sigma,
            beta: d.pcn.beta,
            n_samples: d.pcn.n_samples,
        }
    }
}

pub fn fdnn_pcn(c: &FdnnPcnCfg, ctx: &Ctx) -> Result<Outcome, CmdError> {
    let dir = c.checkpoint.as_ref().ok_or_else(|| CmdError::Config("missing config key `checkpoint`".into()))?;
    let dir = dir
        .canonicalize()
        .map_err(|e| CmdError::Config(format!("config error at `checkpoint`: {}: {e}", dir.display())))?;
    let (cfg, params) = FdnnParams::load(&dir.join("params.bin"))?;
    let basis = ReducedBasis::read_csv(&dir.join("basis.csv"), &dir.join("sigma.csv"))?;
    let toy = toy(c.gamma, c.t_final, c.n_steps, c.u0, c.r_min, c.r_max)?;
    if basis.vectors[0].len() != toy.n_steps + 1 || basis.rank != cfg.out_dim {
        return Err(CmdError::Config("checkpoint does not match the toy problem dimensions".into()));
    }
    let surrogate = Surrogate { cfg, params, basis: Some(basis) };
    let pcn = PcnConfig {
        noise_sigma: c.noise_sigma,
        prior_sigma: c.prior_sigma,
        beta: c.beta,
        n_samples: c.n_samples,
        seed: ctx.seed + SEED_PCN,
    };
    let cmp = fdnn::compare_pcn(&toy, &surrogate, c.xi_true, c.obs_stride, &pcn, ctx.seed + SEED_OBS)?;
    let mut out = Outcome::default();
    let (pf, pr, po) = (ctx.path("chain_full.csv"), ctx.path("chain_surrogate.csv"), ctx.path("observations.csv"));
    cmp.full.write_csv(&pf)?;
    cmp.reduced.write_csv(&pr)?;
    let rows: Vec<Vec<f64>> = cmp.observations.iter().enumerate().map(|(k, v)| vec![k as f64, *v]).collect();
    io::write_csv(&po, &["k", "y"], &rows)?;
    out.artifacts.extend([pf, pr, po]);
    out.metric("acceptance_full", cmp.full.acceptance_rate);
    out.metric("acceptance_surrogate", cmp.reduced.acceptance_rate);
    out.metric("acceptance_gap", cmp.acceptance_gap());
    out.metric("posterior_mean_full", cmp.full.mean_and_se(0, 50).0);
    out.metric("posterior_mean_surrogate", cmp.reduced.mean_and_se(0, 50).0);
    Ok(out)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Selftest {}

fn check(out: &mut Map<String, Value>, name: &str, ok: bool) {
    out.insert(name.to_string(), json!(ok));
}

pub fn selftest(_: &Selftest, ctx: &Ctx) -> Result<Outcome, CmdError> {
    let mut checks = Map::new();

    // L1 stepping at γ=1 is explicit Euler
    let grid = TimeGrid::new(1.0, 200)?;
    let traj = solve_fivp(|u| vec![-2.0 * u[0] + u[1], -u[1]], &[1.0, 0.5], grid, TimeOrder::new(1.0)?)?;
    let mut e = vec![1.0, 0.5];
    let mut euler_ok = true;
    for j in 1..=200 {
        e = vec![e[0] + grid.tau * (-2.0 * e[0] + e[1]), e[1] + grid.tau * (-e[1])];
        euler_ok &= traj.states[j] == e;
    }
    check(&mut checks, "caputo_euler_reduction", euler_ok);
    check(&mut checks, "mittag_leffler_exp", (mittag_leffler(1.0, -1.3)? - (-1.3f64).exp()).abs() <= 1e-12);

    // stiffness symmetric, zero data gives the zero solution
    let g = Grid1D::from_cells(-1.0, 1.0, 8, 4, 4)?;
    let mat = assemble_stiffness(&g, FracOrder::new(0.4)?)?;
    let a = mat.a_ii();
    check(&mut checks, "stiffness_symmetric", (&a - a.transpose()).amax() <= 1e-14 * a.amax());
    let u = solve_dirichlet(&mat, &vec![0.0; g.n_dof()], &vec![0.0; g.exterior_nodes().len()])?;
    check(&mut checks, "dirichlet_zero_data", u.values.iter().all(|v| *v == 0.0));

    // single Fourier mode is damped by the exact symbol ratio
    let k = 3.0;
    let img = sd::PeriodicImage::from_fn(16, 16, |x, _| (2.0 * std::f64::consts::PI * k * x).cos())?;
    let cfg = sd::DenoiseConfig::new(0.5, 2.0)?;
    let den = sd::denoise(&img, &cfg)?;
    let ratio = cfg.lambda / (cfg.lambda + 2.0 * std::f64::consts::PI * k);
    let err = den.data.iter().zip(&img.data).map(|(d, f)| (d - ratio * f).abs()).fold(0.0, f64::max);
    check(&mut checks, "denoise_single_mode", err <= 1e-10);

    // fDNN at γ=1 with zero weights outputs zero; constant pCN likelihood always accepts
    let fc = fdnn::FdnnConfig::new(4, 3, 1, 2, 1.0)?;
    let y = fdnn::forward(&FdnnParams::zeros(&fc), &fc, &[0.7])?;
    check(&mut checks, "fdnn_zero_params", y.iter().all(|v| *v == 0.0));
    let pc = PcnConfig { noise_sigma: 1.0, prior_sigma: 1.0, beta: 0.5, n_samples: 500, seed: ctx.seed };
    let chain = fdnn::pcn_sample(|_| Ok(vec![1.0]), &[0.0], &[0.0], &pc)?;
    check(&mut checks, "pcn_constant_likelihood", chain.acceptance_rate == 1.0);

    let box_ = fracopt::optim::BoxConstraints::uniform(3, 0.0, 1.0)?;
    let p = box_.project(&[-1.0, 0.5, 2.0]);
    check(&mut checks, "box_projection", p == box_.project(&p) && p == vec![0.0, 0.5, 1.0]);

    let failed: Vec<String> = checks.iter().filter(|(_, v)| **v != json!(true)).map(|(k, _)| k.clone()).collect();
    let path = ctx.path("selftest.json");
    write_json(&path, &Value::Object(checks.clone()))?;
    if !failed.is_empty() {
        return Err(CmdError::Numerical(format!("selftest failed: {}", failed.join(", "))));
    }
    let mut out = Outcome::default();
    out.artifact(path);
    out.metric("checks", checks.len());
    out.metric("passed", checks.len());
    Ok(out)
}
