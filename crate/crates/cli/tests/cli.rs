use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracopt")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn assert_artifacts_exist(rep: &Value) {
    for a in rep["artifacts"].as_array().unwrap() {
        let p = Path::new(a.as_str().unwrap());
        let meta = std::fs::metadata(p).unwrap_or_else(|_| panic!("missing artifact {}", p.display()));
        assert!(meta.len() > 0, "empty artifact {}", p.display());
    }
}

#[test]
fn caputo_demo_writes_comparison_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run(&[
        "caputo-demo", "--out", out.to_str().unwrap(), "--gamma", "0.5", "--rate", "4", "--u0", "0.5", "--tau", "0.005",
        "--T", "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,numeric,exact");
    assert_eq!(lines.count(), 201);
    assert!(!text.contains('\r'));
    let rep = report(&out);
    assert!(rep["metrics"]["max_error"].as_f64().unwrap() <= 0.02);
    assert!(rep["seconds"].as_f64().unwrap() >= 0.0);
    assert_artifacts_exist(&rep);
}

#[test]
fn empty_config_applies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, "{}").unwrap();
    let out = tmp.path().join("o");
    let o = run(&["caputo-demo", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let input = &report(&out)["input"];
    assert_eq!(input["gamma"], 0.5);
    assert_eq!(input["tau"], 0.005);
    assert_eq!(input["T"], 1.0);
    assert_eq!(input["seed"], 42);
}

#[test]
fn flag_overrides_file_and_is_echoed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"gamma": 0.7, "tau": 0.01}"#).unwrap();
    let out = tmp.path().join("o");
    let o = run(&["caputo-demo", "--config", cfg.to_str().unwrap(), "--gamma", "0.3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let input = &report(&out)["input"];
    assert_eq!(input["gamma"], 0.3);
    assert_eq!(input["tau"], 0.01);
}

#[test]
fn malformed_inputs_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o_str = out.to_str().unwrap();
    let write = |name: &str, body: &str| {
        let p = tmp.path().join(name);
        std::fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_string()
    };
    let typed = write("typed.json", r#"{"gamma": "half"}"#);
    let broken = write("broken.json", "{\n  \"gamma\": 0.5,\n  oops\n}");
    let array = write("array.json", "[1, 2]");
    let unknown = write("unknown.json", r#"{"gamma": 0.5, "colour": 1}"#);
    let table: Vec<(Vec<&str>, i32, &str)> = vec![
        (vec!["no-such-command"], 2, ""),
        (vec!["caputo-demo", "--out", o_str, "--config", &typed], 2, "gamma"),
        (vec!["caputo-demo", "--out", o_str, "--config", &broken], 2, "line 3"),
        (vec!["caputo-demo", "--out", o_str, "--config", &array], 2, "object"),
        (vec!["caputo-demo", "--out", o_str, "--config", &unknown], 2, "colour"),
        (vec!["caputo-demo", "--out", o_str, "--config", "/nonexistent/c.json"], 2, "cannot read"),
        (vec!["caputo-demo", "--out", o_str, "--gamma", "1.5"], 2, "gamma"),
        (vec!["caputo-demo", "--out", o_str, "--tau"], 2, "tau"),
        (vec!["caputo-demo", "--out", o_str, "--seed", "x"], 2, "seed"),
        (vec!["robin-study", "--out", o_str, "--n", "10,abc"], 2, "n"),
        (vec!["fdnn-pcn", "--out", o_str], 2, "checkpoint"),
        (vec!["fdnn-pcn", "--out", o_str, "--checkpoint", "/nonexistent/ckpt"], 2, "checkpoint"),
        (vec!["denoise", "--out", o_str, "--size", "12"], 2, ""),
        // the explicit scheme blows up for a very stiff rate
        (vec!["caputo-demo", "--out", o_str, "--rate", "1e6", "--tau", "0.1"], 3, "step"),
    ];
    for (args, want, needle) in table {
        let o = run(&args);
        assert_eq!(code(&o), want, "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn robin_study_reports_first_order_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run(&["robin-study", "--out", out.to_str().unwrap(), "--s", "0.5", "--n", "100,1000,10000,100000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = report(&out);
    let slope = rep["metrics"]["slope"].as_f64().unwrap();
    assert!((-1.2..=-0.8).contains(&slope), "{slope}");
    assert_eq!(rep["metrics"]["strictly_decreasing"], true);
    assert_artifacts_exist(&rep);
}

#[test]
fn selftest_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run(&["selftest", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let checks: Value = serde_json::from_str(&std::fs::read_to_string(out.join("selftest.json")).unwrap()).unwrap();
    assert!(checks.as_object().unwrap().values().all(|v| *v == true));
}

fn read_all(dir: &Path, ext: &str) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(ext))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn identical_runs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    for (cmd, extra) in [
        ("denoise", vec!["--size", "32"]),
        ("fdnn-train", vec!["--max-iter", "40", "--n-train", "20", "--n-valid", "5", "--rank", "4"]),
        ("exterior-control", vec!["--h", "0.1", "--max-iter", "20"]),
    ] {
        let mut seen = Vec::new();
        for k in 0..2 {
            let out = tmp.path().join(format!("{cmd}-{k}"));
            let mut args = vec![cmd, "--out", out.to_str().unwrap(), "--seed", "9"];
            args.extend(&extra);
            let o = run(&args);
            assert_eq!(code(&o), 0, "{cmd}: {}", stderr(&o));
            assert_artifacts_exist(&report(&out));
            seen.push(read_all(&out, "csv"));
        }
        assert!(!seen[0].is_empty());
        assert_eq!(seen[0], seen[1], "{cmd} is not reproducible");
    }
}

#[test]
fn seed_changes_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let mut imgs = Vec::new();
    for seed in ["1", "2"] {
        let out = tmp.path().join(seed);
        let o = run(&["denoise", "--out", out.to_str().unwrap(), "--size", "16", "--seed", seed]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        imgs.push(std::fs::read(out.join("denoised.csv")).unwrap());
    }
    assert_ne!(imgs[0], imgs[1]);
}

#[test]
fn train_then_sample_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let ckpt = tmp.path().join("train");
    let o = run(&["fdnn-train", "--out", ckpt.to_str().unwrap(), "--max-iter", "300"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = report(&ckpt);
    assert!(rep["metrics"]["validation_error"].as_f64().unwrap() <= 5e-2);
    assert_artifacts_exist(&rep);
    let out = tmp.path().join("pcn");
    let o = run(&["fdnn-pcn", "--out", out.to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap(), "--n-samples", "4000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rep = report(&out);
    assert!(rep["metrics"]["acceptance_gap"].as_f64().unwrap() <= 0.1);
    assert_artifacts_exist(&rep);
    let chain = std::fs::read_to_string(out.join("chain_full.csv")).unwrap();
    assert_eq!(chain.lines().count(), 4001);
    // a checkpoint built for a different toy grid is refused
    let o = run(&["fdnn-pcn", "--out", out.to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap(), "--n-steps", "20"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn solvers_produce_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("dirichlet-solve", vec!["--h", "0.0625"], vec!["solution.csv"]),
        ("state-constrained", vec!["--levels", "3", "--h", "0.125"], vec!["gamma_sweep.csv", "kkt.json", "control.csv"]),
        ("exterior-control", vec!["--h", "0.1", "--max-iter", "30"], vec!["control.csv", "state.csv", "optim_log.csv"]),
    ];
    for (cmd, extra, files) in cases {
        let out = tmp.path().join(cmd);
        let mut args = vec![cmd, "--out", out.to_str().unwrap()];
        args.extend(&extra);
        let o = run(&args);
        assert_eq!(code(&o), 0, "{cmd}: {}", stderr(&o));
        let rep = report(&out);
        assert_artifacts_exist(&rep);
        for f in files {
            assert!(out.join(f).is_file(), "{cmd}: {f}");
        }
        assert_eq!(rep["command"], cmd);
    }
    let rep = report(&tmp.path().join("dirichlet-solve"));
    assert!(rep["metrics"]["l2_error"].as_f64().unwrap() < 1e-2);
}
