//! `fracopt`: batch driver with one subcommand per experiment.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 1 I/O failure.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use commands::{CmdError, Ctx, Outcome};
use config::ConfigError;

#[derive(Parser)]
#[command(name = "fracopt", version, about = "Fractional PDE, control and fDNN experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// L1 stepping against the Mittag-Leffler solution of u' = -rate u
    CaputoDemo(Common),
    /// Spectral fractional denoising of a phantom or a PGM image
    Denoise(Common),
    /// Weak Dirichlet exterior-value solve with a known solution
    DirichletSolve(Common),
    /// Robin-to-Dirichlet convergence in the penalty n
    RobinStudy(Common),
    /// Exterior Dirichlet control through the Robin surrogate
    ExteriorControl(Common),
    /// Moreau-Yosida gamma sweep for a state-constrained control problem
    StateConstrained(Common),
    /// Train a POD + fDNN surrogate of the Caputo toy problem
    FdnnTrain(Common),
    /// pCN sampling with the full solver and a trained surrogate
    FdnnPcn(Common),
    /// Quick structural checks of every module
    Selftest(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON object with parameter values
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// master seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// parameter overrides as `--key value`
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

impl Common {
    /// Pulls `--config/--out/--seed` out of the trailing overrides, where
    /// they land once the first parameter flag has been seen.
    fn normalize(mut self) -> Result<Self, ConfigError> {
        let mut rest = Vec::new();
        let mut it = std::mem::take(&mut self.overrides).into_iter();
        while let Some(arg) = it.next() {
            let (flag, inline) = match arg.split_once('=') {
                Some((f, v)) => (f.to_string(), Some(v.to_string())),
                None => (arg.clone(), None),
            };
            if matches!(flag.as_str(), "--config" | "--out" | "--seed") {
                let v = match inline {
                    Some(v) => v,
                    None => it.next().ok_or_else(|| ConfigError(format!("flag `{flag}` needs a value")))?,
                };
                match flag.as_str() {
                    "--config" => self.config = Some(PathBuf::from(v)),
                    "--out" => self.out = PathBuf::from(v),
                    _ => {
                        self.seed = v.parse().map_err(|_| ConfigError(format!("config error at `seed`: not an integer: {v}")))?
                    }
                }
            } else {
                rest.push(arg);
            }
        }
        self.overrides = rest;
        Ok(self)
    }
}

fn run_command<T, F>(name: &str, common: Common, run: F) -> Result<Value, CmdError>
where
    T: DeserializeOwned + Serialize,
    F: FnOnce(&T, &Ctx) -> Result<Outcome, CmdError>,
{
    let common = common.normalize()?;
    let file = match &common.config {
        Some(p) => config::read_file(p)?,
        None => Map::new(),
    };
    let flags = config::parse_overrides(&common.overrides)?;
    let cfg: T = config::build(file, flags)?;
    std::fs::create_dir_all(&common.out).map_err(|e| CmdError::Io(format!("{}: {e}", common.out.display())))?;
    let ctx = Ctx { out: common.out.clone(), seed: common.seed };
    let start = Instant::now();
    let outcome = run(&cfg, &ctx)?;
    let seconds = start.elapsed().as_secs_f64();
    let mut artifacts: Vec<String> = outcome.artifacts.iter().map(|p| p.display().to_string()).collect();
    let report_path = common.out.join("report.json");
    artifacts.push(report_path.display().to_string());
    let mut input = serde_json::to_value(&cfg).map_err(|e| CmdError::Io(e.to_string()))?;
    if let Value::Object(m) = &mut input {
        m.insert("seed".into(), json!(common.seed));
        m.insert("out".into(), json!(common.out.display().to_string()));
    }
    let report = json!({
        "command": name,
        "input": input,
        "metrics": Value::Object(outcome.metrics),
        "seconds": seconds,
        "artifacts": artifacts,
    });
    let text = serde_json::to_string_pretty(&report).map_err(|e| CmdError::Io(e.to_string()))?;
    write_text(&report_path, &(text + "\n"))?;
    Ok(report)
}

fn write_text(path: &Path, text: &str) -> Result<(), CmdError> {
    std::fs::write(path, text).map_err(|e| CmdError::Io(format!("{}: {e}", path.display())))
}

fn dispatch(cmd: Command) -> Result<Value, CmdError> {
    match cmd {
        Command::CaputoDemo(c) => run_command("caputo-demo", c, commands::caputo_demo),
        Command::Denoise(c) => run_command("denoise", c, commands::denoise),
        Command::DirichletSolve(c) => run_command("dirichlet-solve", c, commands::dirichlet_solve),
        Command::RobinStudy(c) => run_command("robin-study", c, commands::robin_study),
        Command::ExteriorControl(c) => run_command("exterior-control", c, commands::exterior_control),
        Command::StateConstrained(c) => run_command("state-constrained", c, commands::state_constrained),
        Command::FdnnTrain(c) => run_command("fdnn-train", c, commands::fdnn_train),
        Command::FdnnPcn(c) => run_command("fdnn-pcn", c, commands::fdnn_pcn),
        Command::Selftest(c) => run_command("selftest", c, commands::selftest),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(report) => {
            println!("{}", serde_json::to_string(&report["metrics"]).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
