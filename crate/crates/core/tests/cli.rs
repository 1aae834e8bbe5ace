//! End-to-end tests of the `conic-shock` binary: exit codes, artifacts and
//! manifests.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use conic_shock::export::sha256_hex;
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_conic-shock"));
    c.env_remove("CONIC_SHOCK_OUT");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn background_writes_hashed_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bg");
    let o = run(&["background", "--b0", "20", "--grid", "256"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "background");
    let artifacts = manifest["artifacts"].as_array().unwrap();
    let names: BTreeSet<&str> = artifacts.iter().map(|a| a["path"].as_str().unwrap()).collect();
    assert!(names.contains("background.csv") && names.contains("background.json"));
    for a in artifacts {
        let bytes = std::fs::read(out.join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"].as_str().unwrap(), sha256_hex(&bytes));
        assert_eq!(a["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
}

#[test]
fn invalid_gas_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["background", "--b0", "20", "--gamma", "3.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["background", "--b0", "20", "--rho0", "-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["background"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn slow_piston_reports_bracket_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["background", "--b0", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bracket"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn default_verify_fails_exactly_on_known_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let report = read_json(&dir.path().join("verify.json"));
    let failed: BTreeSet<String> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["enforced"] == true && c["pass"] == false)
        .map(|c| {
            let at = c["b0"].as_f64().map(|b| format!("@{b}")).unwrap_or_default();
            format!("{}:{}{at}", c["suite"].as_str().unwrap(), c["name"].as_str().unwrap())
        })
        .collect();
    let expected: BTreeSet<String> = [
        "boundary:d22_k0@40",
        "boundary:d22_k0@80",
        "stability:quadratic_form_over_delta0@40",
        "stability:quadratic_form_over_delta0@80",
        "asymptotics:shock_speed_slope",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    assert_eq!(failed, expected);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().any(|l| l.starts_with("PASS asymptotics sweep supersonic_gap_slope")), "{stdout}");
}

#[test]
fn single_suite_selection() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--suite", "ellipticity", "--b0", "40,80"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report = read_json(&dir.path().join("verify.json"));
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["suite"] == "ellipticity"));
    let o = run(&["verify", "--suite", "nonsense"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupted_profile_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--suite", "residual", "--b0", "40", "--corrupt-profile", "1e-3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let clean = run(&["verify", "--suite", "residual", "--b0", "40"], dir.path());
    assert_eq!(clean.status.code(), Some(0));
}

#[test]
fn certify_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["certify", "--b0", "40", "--mu", "-2.5"], &dir.path().join("a"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["certify", "--b0", "40", "--mu", "-2.0"], &dir.path().join("b"));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("certificate fails:") && err.contains("symbolic."), "{err}");
    let o = run(&["certify", "--b0", "40", "--mu", "auto"], &dir.path().join("c"));
    assert_eq!(o.status.code(), Some(0));
    let m = read_json(&dir.path().join("c").join("manifest.json"));
    let cert = read_json(&dir.path().join("c").join("certificate.json"));
    let (lo, hi) = (cert["window"]["lower"].as_f64().unwrap(), cert["window"]["upper"].as_f64().unwrap());
    assert!((m["parameters"]["mu"].as_f64().unwrap() - 0.5 * (lo + hi)).abs() < 1e-12);
    let o = run(&["certify", "--b0", "40", "--mu", "abc"], &dir.path().join("d"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unperturbed_simulation_stays_on_background() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b0 = 40.0\neps = 0.0\ngrid_points = 64\nt_end = 10.0\n");
    let out = dir.path().join("sim");
    let o = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_json(&out.join("summary.json"));
    let h = 1.0 / 64.0;
    assert!(summary["result"]["max_self_similar_dev"].as_f64().unwrap() < 10.0 * h * h);
    assert!(out.join("series.csv").exists());
}

#[test]
fn perturbed_simulation_emits_decay_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "b0 = 20.0\neps = 0.01\ngrid_points = 96\nt_end = 20.0\nfit_window = [2.0, 20.0]\noutput_every = 2\n",
    );
    let out = dir.path().join("sim");
    let o = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = read_json(&out.join("decay_fit.json"));
    assert!(fit["m0_est"].as_f64().unwrap() > 0.0);
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["inputs"][0].as_str().unwrap(), cfg.display().to_string());
}

#[test]
fn simulation_config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--config", "/nonexistent/run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), "grid_points = 4\n");
    let o = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let cfg = write_config(dir.path(), "unknown_key = 1\n");
    let o = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulation_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b0 = 10.0\neps = 0.01\ngrid_points = 48\nt_end = 4.0\n");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
        assert_eq!(o.status.code(), Some(0));
        outputs.push((std::fs::read(out.join("series.csv")).unwrap(), std::fs::read(out.join("summary.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn output_directory_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_conic-shock"))
        .args(["certify", "--b0", "40", "--mu", "auto"])
        .env("CONIC_SHOCK_OUT", &target)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(target.join("certificate.json").exists());
    assert!(!dir.path().join("out").exists());
}
