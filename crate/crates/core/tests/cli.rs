//! Integration tests for the command-line front end: subcommands, exit
//! codes, output-directory resolution, and artifact contents.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cfheat")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cfheat-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const QUICK: &str = "\
alpha = 0.5
k = 2
lambda = 1 1 1
q = 1.0
forcing = \"t^4*sin(pi*x)\"
modes = 2
grid_t = 16
grid_x = 16
ode_steps = 4096
quad_panels = 2048
modal_samples = 128
residual_nodes = 8
";

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn cfheat")
}

#[test]
fn solve_writes_artifacts_and_exits_zero() {
    let dir = scratch("solve");
    let cfg = write_config(&dir, "run.cfg", QUICK);
    let out_dir = dir.join("artifacts");
    let out = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for name in ["grid.csv", "diagnostics.txt", "verification.txt"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }

    // The grid header row carries the x nodes; boundary columns are zero.
    let csv = std::fs::read_to_string(out_dir.join("grid.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,0,"));
    assert!(header.ends_with(",1"));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 18); // t column + 17 x nodes
        assert_eq!(fields[1], "0");
        assert_eq!(fields[17], "0");
    }

    // Provenance carries the config hash and solver tags.
    let diag = std::fs::read_to_string(out_dir.join("diagnostics.txt")).unwrap();
    assert!(diag.contains("config_hash = 0x"));
    assert!(!diag.contains("config_hash = 0x0000000000000000"));
    assert!(diag.contains("solver = closed-form"));
    let verification = std::fs::read_to_string(out_dir.join("verification.txt")).unwrap();
    assert!(verification.contains("mode_residual.pass = true"));
    assert!(verification.contains("boundary.max_violation = 0"));
}

#[test]
fn validate_reports_conditions() {
    let dir = scratch("validate");
    let good = write_config(&dir, "good.cfg", QUICK);
    let out = run(&["validate", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("(max violation").count(), 7, "stdout: {stdout}");
    assert!(!stdout.contains("FAIL"));
    assert!(stdout.contains("overall: pass"));

    let bad = write_config(
        &dir,
        "bad.cfg",
        &QUICK.replace("t^4*sin(pi*x)", "t*sin(pi*x)"),
    );
    let out = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("dt_f_at_t0: FAIL"));

    let endpoint = write_config(&dir, "endpoint.cfg", &QUICK.replace("t^4*sin(pi*x)", "x*(1-x)"));
    let out = run(&["validate", endpoint.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("dx2_f_at_x0: FAIL"));
}

#[test]
fn missing_config_is_an_io_error() {
    let out = run(&["solve", "/nonexistent/config.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
}

#[test]
fn incompatible_forcing_warns_without_strict() {
    let dir = scratch("warn");
    // Band-limited forcing that fails only the dt|0 condition: residual
    // tolerances still hold, so the failure downgrades to a warning.
    let cfg = write_config(
        &dir,
        "warn.cfg",
        &QUICK.replace("t^4*sin(pi*x)", "t*sin(pi*x)"),
    );
    let out_dir = dir.join("artifacts");
    let out = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let verification = std::fs::read_to_string(out_dir.join("verification.txt")).unwrap();
    assert!(verification.contains("compatibility.pass = false"));

    let strict = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--strict",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn out_dir_resolution_prefers_flag_over_env() {
    let dir = scratch("outdir");
    let cfg = write_config(&dir, "run.cfg", QUICK);
    let env_dir = dir.join("from-env");
    let flag_dir = dir.join("from-flag");

    let out = Command::new(bin())
        .args(["solve", cfg.to_str().unwrap()])
        .env("CFHEAT_OUT", &env_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(env_dir.join("grid.csv").exists());

    let out = Command::new(bin())
        .args([
            "solve",
            cfg.to_str().unwrap(),
            "--out",
            flag_dir.to_str().unwrap(),
        ])
        .env("CFHEAT_OUT", &env_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(flag_dir.join("grid.csv").exists());
}

#[test]
fn cross_check_flag_emits_solver_difference() {
    let dir = scratch("crosscheck");
    let cfg = write_config(&dir, "run.cfg", QUICK);
    let out_dir = dir.join("artifacts");
    let out = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--cross-check",
        "--jobs",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let diag = std::fs::read_to_string(out_dir.join("diagnostics.txt")).unwrap();
    assert!(diag.contains("mode_1.cross_check_diff = "));
    let diff: f64 = diag
        .lines()
        .find_map(|l| l.strip_prefix("mode_1.cross_check_diff = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(diff < 1e-6, "solver difference {diff}");
}

#[test]
fn mode_diagnostics_match_reduction_example() {
    let dir = scratch("diag");
    let mut body = QUICK.replace("lambda = 1 1 1", "lambda = 0 0 1");
    body = body.replace("modes = 2", "modes = 4");
    let cfg = write_config(&dir, "run.cfg", &body);
    let out_dir = dir.join("artifacts");
    let out = run(&[
        "solve",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let diag = std::fs::read_to_string(out_dir.join("diagnostics.txt")).unwrap();

    // Mode 1 cubic for alpha = 1/2, lambda = (0,0,1):
    // (A1, A2, A3) = (-3, 3 + pi^2/2, -1).
    let delta: f64 = diag
        .lines()
        .find_map(|l| l.strip_prefix("mode_1.discriminant = "))
        .unwrap()
        .parse()
        .unwrap();
    let a2 = 3.0 + std::f64::consts::PI.powi(2) / 2.0;
    let expected = cfheat::temporal::cubic_discriminant(-3.0, a2, -1.0);
    assert!((delta - expected).abs() <= 1e-9 * expected.abs());

    // Higher modes are identically zero under single-mode forcing.
    for m in 2..=4 {
        let sup: f64 = diag
            .lines()
            .find_map(|l| l.strip_prefix(&format!("mode_{m}.sup = ")))
            .unwrap()
            .parse()
            .unwrap();
        assert!(sup < 1e-10, "mode {m} sup {sup}");
    }
}
