//! Command line front end.
//!
//! Exit codes: 0 success (all checks pass), 1 computation failure or a
//! failed check, 2 usage or configuration error.

use crate::background::{solve_background, DEFAULT_GRID};
use crate::certificates::{admissible_mu, certify, MultiplierCertificate};
use crate::export::{resolve_out_dir, ArtifactWriter};
use crate::gas::GasParams;
use crate::simulator::{run, DecayFit, RunResult, SimConfig, SimError};
use crate::verify::{run_verify, Suite, VerifyOptions};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "conic-shock", version, about = "Self-similar piston/shock flows: background, checks, certificates, simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct GasArgs {
    /// Adiabatic exponent, in (1, 3).
    #[arg(long, default_value_t = 1.4, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Pressure constant in P = A rho^gamma.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub a: f64,
    /// Density of the gas at rest.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub rho0: f64,
    /// Space dimension (2 or 3).
    #[arg(long, default_value_t = 3)]
    pub n: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the self-similar background and write its profile.
    Background {
        #[arg(long, allow_negative_numbers = true)]
        b0: f64,
        #[command(flatten)]
        gas: GasArgs,
        /// Samples on [b0, s0].
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification suites over a sweep of piston speeds.
    Verify {
        /// Suite to run (repeatable); all suites when omitted.
        #[arg(long = "suite")]
        suites: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 20.0, 40.0, 80.0])]
        b0: Vec<f64>,
        #[command(flatten)]
        gas: GasArgs,
        #[arg(long, default_value_t = DEFAULT_GRID)]
        grid: usize,
        /// Points of the hodograph grid on [1, 2].
        #[arg(long, default_value_t = 129)]
        r_grid: usize,
        /// Add a sawtooth of this relative amplitude to the hodograph profile.
        #[arg(long)]
        corrupt_profile: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the energy-multiplier certificate.
    Certify {
        #[arg(long, allow_negative_numbers = true)]
        b0: f64,
        /// Weight exponent, or `auto` for the midpoint of the admissible window.
        #[arg(long, allow_negative_numbers = true)]
        mu: String,
        #[command(flatten)]
        gas: GasArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the perturbed piston simulation from a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Outcome of a command: exit code plus the message for stderr.
struct Outcome {
    code: i32,
    message: Option<String>,
}

impl Outcome {
    fn ok() -> Self {
        Outcome { code: EXIT_OK, message: None }
    }
    fn fail(msg: impl Into<String>) -> Self {
        Outcome { code: EXIT_FAILURE, message: Some(msg.into()) }
    }
    fn usage(msg: impl Into<String>) -> Self {
        Outcome { code: EXIT_USAGE, message: Some(msg.into()) }
    }
}

fn gas_from(args: &GasArgs) -> Result<GasParams, Outcome> {
    if args.n != 2 && args.n != 3 {
        return Err(Outcome::usage(format!("--n must be 2 or 3, got {}", args.n)));
    }
    GasParams::new(args.a, args.gamma, args.rho0).map_err(|e| Outcome::usage(e.to_string()))
}

fn io_fail(e: std::io::Error) -> Outcome {
    Outcome::fail(format!("cannot write output: {e}"))
}

fn cmd_background(b0: f64, gas_args: &GasArgs, grid: usize, out: Option<PathBuf>) -> Result<Outcome, Outcome> {
    let clock = Instant::now();
    let gas = gas_from(gas_args)?;
    if !(b0 > 0.0 && b0.is_finite()) {
        return Err(Outcome::usage(format!("--b0 must be positive, got {b0}")));
    }
    if grid < 3 {
        return Err(Outcome::usage(format!("--grid must be at least 3, got {grid}")));
    }
    let sol = solve_background(b0, &gas, gas_args.n, grid).map_err(|e| Outcome::fail(format!("background solve failed: {e}")))?;
    let summary = sol.summary();
    let mut w = ArtifactWriter::create(&resolve_out_dir(out.as_deref())).map_err(io_fail)?;
    w.write("background.csv", sol.to_csv().as_bytes()).map_err(io_fail)?;
    w.write_json("background.json", &summary).map_err(io_fail)?;
    let params = serde_json::json!({ "b0": b0, "gamma": gas.gamma, "a": gas.a, "rho0": gas.rho0, "n": gas_args.n, "grid": grid });
    w.finish("background", params, vec![], clock.elapsed().as_secs_f64()).map_err(io_fail)?;
    println!("s0 = {}  s0 - b0 = {:e}  rho_plus = {:e}", summary.s0, summary.s0_minus_b0, summary.rho_plus);
    Ok(Outcome::ok())
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    suites: &[String],
    b0: Vec<f64>,
    gas_args: &GasArgs,
    grid: usize,
    r_grid: usize,
    corrupt_profile: Option<f64>,
    out: Option<PathBuf>,
) -> Result<Outcome, Outcome> {
    let clock = Instant::now();
    let gas = gas_from(gas_args)?;
    if b0.is_empty() || b0.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
        return Err(Outcome::usage("--b0 must be a non-empty list of positive values"));
    }
    if r_grid < 4 {
        return Err(Outcome::usage("--r-grid must be at least 4"));
    }
    let mut opts = VerifyOptions::new(gas);
    opts.b0 = b0;
    opts.n = gas_args.n;
    opts.grid = grid;
    opts.r_grid = r_grid;
    opts.corrupt_profile = corrupt_profile;
    if !suites.is_empty() {
        opts.suites = suites.iter().map(|s| s.parse::<Suite>()).collect::<Result<_, _>>().map_err(Outcome::usage)?;
    }
    let report = run_verify(&opts).map_err(|e| Outcome::fail(format!("verification aborted: {e}")))?;
    let mut w = ArtifactWriter::create(&resolve_out_dir(out.as_deref())).map_err(io_fail)?;
    w.write_json("verify.json", &report).map_err(io_fail)?;
    w.finish("verify", serde_json::to_value(&opts).unwrap_or_default(), vec![], clock.elapsed().as_secs_f64())
        .map_err(io_fail)?;
    for c in &report.checks {
        let status = match (c.pass, c.enforced) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "OUTSIDE-REGIME",
        };
        let b0 = c.b0.map(|b| format!("b0={b}")).unwrap_or_else(|| "sweep".into());
        println!("{status} {} {b0} {} = {:e} ({})", c.suite.name(), c.name, c.value, c.bound);
    }
    let failures = report.failures();
    if report.pass {
        println!("all {} checks pass", report.checks.len());
        Ok(Outcome::ok())
    } else {
        let names: Vec<String> =
            failures.iter().map(|c| format!("{}:{}{}", c.suite.name(), c.name, c.b0.map(|b| format!("@{b}")).unwrap_or_default())).collect();
        Ok(Outcome::fail(format!("{} enforced check(s) failed: {}", failures.len(), names.join(", "))))
    }
}

/// Names of the failed certificate conditions.
pub fn failed_conditions(cert: &MultiplierCertificate) -> Vec<String> {
    let mut names = Vec::new();
    let collect = |v: serde_json::Value, prefix: &str, names: &mut Vec<String>| {
        if let serde_json::Value::Object(map) = v {
            for (k, v) in map {
                if v == serde_json::Value::Bool(false) {
                    names.push(format!("{prefix}{k}"));
                }
            }
        }
    };
    collect(serde_json::to_value(cert.symbolic).unwrap_or_default(), "symbolic.", &mut names);
    collect(serde_json::to_value(&cert.flags).unwrap_or_default(), "", &mut names);
    names.retain(|n| n != "symbolic");
    names
}

fn cmd_certify(b0: f64, mu: &str, gas_args: &GasArgs, out: Option<PathBuf>) -> Result<Outcome, Outcome> {
    let clock = Instant::now();
    let gas = gas_from(gas_args)?;
    if !(b0 > 0.0 && b0.is_finite()) {
        return Err(Outcome::usage(format!("--b0 must be positive, got {b0}")));
    }
    let mu_value = if mu == "auto" {
        admissible_mu(gas_args.n, gas.gamma).map_err(|e| Outcome::usage(e.to_string()))?.midpoint()
    } else {
        mu.parse::<f64>().map_err(|_| Outcome::usage(format!("--mu must be a number or 'auto', got '{mu}'")))?
    };
    let cert = certify(gas_args.n, &gas, b0, mu_value).map_err(|e| Outcome::fail(format!("certificate failed: {e}")))?;
    let mut w = ArtifactWriter::create(&resolve_out_dir(out.as_deref())).map_err(io_fail)?;
    w.write_json("certificate.json", &cert).map_err(io_fail)?;
    let params = serde_json::json!({ "b0": b0, "mu": mu_value, "mu_arg": mu, "gamma": gas.gamma, "a": gas.a, "rho0": gas.rho0, "n": gas_args.n });
    w.finish("certify", params, vec![], clock.elapsed().as_secs_f64()).map_err(io_fail)?;
    println!(
        "mu = {mu_value}  window = ({}, {})  m0 sup = {}  asymptotic regime = {}",
        cert.window.lower, cert.window.upper, cert.decay_exponent, cert.asymptotic_regime
    );
    if cert.pass {
        println!("certificate passes");
        Ok(Outcome::ok())
    } else {
        Ok(Outcome::fail(format!("certificate fails: {}", failed_conditions(&cert).join(", "))))
    }
}

#[derive(Serialize)]
struct SimulationSummary<'a> {
    result: &'a RunResult,
    decay_fit: Option<DecayFit>,
    fit_error: Option<String>,
}

fn cmd_simulate(config: PathBuf, out: Option<PathBuf>) -> Result<Outcome, Outcome> {
    let clock = Instant::now();
    let text = std::fs::read_to_string(&config)
        .map_err(|e| Outcome::usage(format!("cannot read config {}: {e}", config.display())))?;
    let cfg = SimConfig::from_toml(&text).map_err(|e| Outcome::usage(e.to_string()))?;
    let result = run(&cfg).map_err(|e: SimError| Outcome::fail(format!("simulation failed: {e}")))?;
    let (decay_fit, fit_error) = match result.decay_fit() {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut w = ArtifactWriter::create(&resolve_out_dir(out.as_deref())).map_err(io_fail)?;
    w.write("series.csv", result.to_csv().as_bytes()).map_err(io_fail)?;
    if let Some(fit) = &decay_fit {
        w.write_json("decay_fit.json", fit).map_err(io_fail)?;
    }
    w.write_json("summary.json", &SimulationSummary { result: &result, decay_fit: decay_fit.clone(), fit_error: fit_error.clone() })
        .map_err(io_fail)?;
    w.finish(
        "simulate",
        serde_json::to_value(&cfg).unwrap_or_default(),
        vec![config.display().to_string()],
        clock.elapsed().as_secs_f64(),
    )
    .map_err(io_fail)?;
    let last = result.records.last().expect("initial record");
    println!(
        "steps = {}  t = {}  |zeta/t - s0| = {:e}  sup_dev = {:e}  min entropy margin = {:e}",
        result.steps, last.t, last.self_similar_dev, last.sup_dev, result.min_entropy_margin
    );
    match (&decay_fit, &fit_error) {
        (Some(f), _) => println!("m0_est = {} (residual {:e}, {} samples)", f.m0_est, f.residual, f.series.len()),
        (None, Some(e)) => println!("no decay fit: {e}"),
        _ => {}
    }
    Ok(Outcome::ok())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Background { b0, gas, grid, out } => cmd_background(b0, &gas, grid, out),
        Command::Verify { suites, b0, gas, grid, r_grid, corrupt_profile, out } => {
            cmd_verify(&suites, b0, &gas, grid, r_grid, corrupt_profile, out)
        }
        Command::Certify { b0, mu, gas, out } => cmd_certify(b0, &mu, &gas, out),
        Command::Simulate { config, out } => cmd_simulate(config, out),
    }
    .unwrap_or_else(|o| o);
    if let Some(msg) = outcome.message {
        eprintln!("{}: {msg}", if outcome.code == EXIT_USAGE { "usage error" } else { "error" });
    }
    outcome.code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_subcommands() {
        Cli::try_parse_from(["x", "background", "--b0", "40"]).unwrap();
        Cli::try_parse_from(["x", "verify", "--suite", "ellipticity", "--b0", "40,80"]).unwrap();
        Cli::try_parse_from(["x", "certify", "--b0", "80", "--mu", "-2.5"]).unwrap();
        Cli::try_parse_from(["x", "certify", "--b0", "80", "--mu", "auto"]).unwrap();
        Cli::try_parse_from(["x", "simulate", "--config", "a.toml"]).unwrap();
        assert!(Cli::try_parse_from(["x", "frobnicate"]).is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_cli(["x", "background", "--b0", "40", "--gamma", "3.5"]), EXIT_USAGE);
        assert_eq!(run_cli(["x", "background"]), EXIT_USAGE);
        assert_eq!(run_cli(["x", "certify", "--b0", "80", "--mu", "abc"]), EXIT_USAGE);
        assert_eq!(run_cli(["x", "verify", "--suite", "nope"]), EXIT_USAGE);
        assert_eq!(run_cli(["x", "simulate", "--config", "/nonexistent/run.toml"]), EXIT_USAGE);
    }
}
