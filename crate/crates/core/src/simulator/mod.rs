//! Radially symmetric piston/shock simulation with a fitted shock.
//!
//! The gas between the piston `r = σ(t) = t·b(t)` and the shock
//! `r = ζ(t)` is advanced in similarity variables `τ = ln t`, `s = r/t`
//! on the mapped coordinate `y = (s − σ/t)/(ζ/t − σ/t) ∈ [0, 1]`. The
//! unknowns are `W = Φ_r` and `V = Φ_t`, which are constant in `τ` for
//! the self-similar background; `Φ` is recovered by quadrature in `τ`.

pub mod banded;
pub mod fit;
pub mod modified;
mod scheme;

pub use fit::{fit_decay, DecayFit};
pub use modified::{ModifiedBackground, ModifiedPoint};
pub use scheme::{ShockSnapshot, Simulator, DTAU_MAX};

use crate::background::{solve_extended, BackgroundError};
use crate::gas::{GasError, GasParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Gas(#[from] GasError),
    #[error(transparent)]
    Background(#[from] BackgroundError),
    #[error("CFL violation at t = {t}: Courant number {courant} after the step")]
    Cfl { t: f64, courant: f64 },
    #[error("vacuum at t = {t}, node {node}: Bernoulli enthalpy {enthalpy:e}")]
    Vacuum { t: f64, node: usize, enthalpy: f64 },
    #[error("piston overtook the shock at t = {t}")]
    Collapse { t: f64 },
    #[error("entropy condition violated at t = {t}: shock density / rho0 - 1 = {margin:e}")]
    Entropy { t: f64, margin: f64 },
    #[error("Newton iteration failed at t = {t}: last correction {correction:e}")]
    Newton { t: f64, correction: f64 },
    #[error("singular Jacobian at t = {t}, row {row}")]
    Singular { t: f64, row: usize },
    #[error("modified background undefined at t = {t}: phi(sigma/t) = {phi:e}")]
    ModifiedBackground { t: f64, phi: f64 },
    #[error("decay fit: {0}")]
    Fit(String),
}

/// Shape `h(t)` of the piston speed perturbation `b(t) = b₀ + εh(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// `h = 1/(1+t)`.
    InverseLinear,
    /// `h = 1/(1+t)²`.
    InverseSquare,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PistonProfile {
    pub b0: f64,
    pub eps: f64,
    pub kind: Perturbation,
}

impl PistonProfile {
    fn h(&self, t: f64) -> (f64, f64) {
        let q = 1.0 + t;
        match self.kind {
            Perturbation::InverseLinear => (1.0 / q, -1.0 / (q * q)),
            Perturbation::InverseSquare => (1.0 / (q * q), -2.0 / (q * q * q)),
            Perturbation::None => (0.0, 0.0),
        }
    }

    /// `b(t)`, the piston position in the similarity variable.
    pub fn b(&self, t: f64) -> f64 {
        self.b0 + self.eps * self.h(t).0
    }

    /// `t·b'(t) = d(σ/t)/dτ`.
    pub fn t_b_prime(&self, t: f64) -> f64 {
        self.eps * t * self.h(t).1
    }

    pub fn sigma(&self, t: f64) -> f64 {
        t * self.b(t)
    }

    /// `σ̇ = b + t·b'`.
    pub fn sigma_dot(&self, t: f64) -> f64 {
        self.b(t) + self.t_b_prime(t)
    }
}

fn default_n() -> usize {
    3
}
fn default_gamma() -> f64 {
    1.4
}
fn default_one() -> f64 {
    1.0
}
fn default_b0() -> f64 {
    40.0
}
fn default_perturbation() -> Perturbation {
    Perturbation::InverseLinear
}
fn default_grid() -> usize {
    512
}
fn default_cfl() -> f64 {
    0.5
}
fn default_t_end() -> f64 {
    50.0
}
fn default_output_every() -> usize {
    10
}
fn default_window() -> (f64, f64) {
    (5.0, 50.0)
}
fn default_background_grid() -> usize {
    crate::background::DEFAULT_GRID
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_one")]
    pub a: f64,
    #[serde(default = "default_one")]
    pub rho0: f64,
    #[serde(default = "default_b0")]
    pub b0: f64,
    #[serde(default)]
    pub eps: f64,
    #[serde(default = "default_perturbation")]
    pub perturbation: Perturbation,
    /// Nodes of the mapped grid, including both boundaries.
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    /// Convective Courant number `Δτ·max|s+g−W| / (Δy·L)`.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Steps between rows of the CSV output.
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    #[serde(default = "default_window")]
    pub fit_window: (f64, f64),
    #[serde(default = "default_background_grid")]
    pub background_grid: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |m: String| Err(SimError::Config(m));
        if self.n != 2 && self.n != 3 {
            return fail(format!("n must be 2 or 3, got {}", self.n));
        }
        if !(self.eps >= 0.0) {
            return fail(format!("eps must be non-negative, got {}", self.eps));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return fail(format!("cfl must lie in (0, 1), got {}", self.cfl));
        }
        if self.grid_points < 32 {
            return fail(format!("grid_points must be at least 32, got {}", self.grid_points));
        }
        if !(self.t_end > 1.0) || !self.t_end.is_finite() {
            return fail(format!("t_end must exceed 1, got {}", self.t_end));
        }
        if self.output_every == 0 {
            return fail("output_every must be positive".into());
        }
        if !(self.b0 > 0.0) {
            return fail(format!("b0 must be positive, got {}", self.b0));
        }
        GasParams::new(self.a, self.gamma, self.rho0)?;
        Ok(())
    }

    pub fn gas(&self) -> Result<GasParams, SimError> {
        Ok(GasParams::new(self.a, self.gamma, self.rho0)?)
    }

    pub fn piston(&self) -> PistonProfile {
        PistonProfile { b0: self.b0, eps: self.eps, kind: self.perturbation }
    }
}

/// Physical snapshot on the mapped grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub sigma: f64,
    pub zeta: f64,
    /// Mapped coordinate of each node.
    pub y: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub phi_r: Vec<f64>,
}

/// Diagnostics after one accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub zeta: f64,
    pub sigma: f64,
    /// `max |Φ_r − ∂_rΦ_a|` over the grid.
    pub sup_dev: f64,
    /// `|ζ/t − s₀|`.
    pub self_similar_dev: f64,
    /// `|Δζ/Δt − ½(RH_n + RH_{n+1})| / s₀` with `RH = HΦ_r/(H−ρ₀)` at the shock.
    pub rh_residual: f64,
    /// Relative defect of `∫ρ r^{n−1}dr = ρ₀ζⁿ/n` over the layer.
    pub mass_residual: f64,
    /// `H/ρ₀ − 1` at the shock.
    pub entropy_margin: f64,
    /// `|Φ(ζ)| / (tb₀²)`.
    pub continuity: f64,
    pub courant: f64,
}

impl Record {
    /// Size of the perturbation `(∇φ̇, ξ)`: the larger of the gradient
    /// deviation and the shock-speed deviation.
    pub fn perturbation(&self) -> f64 {
        self.sup_dev.max(self.self_similar_dev)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub config: SimConfig,
    pub s0: f64,
    pub xi0: f64,
    pub steps: usize,
    pub records: Vec<Record>,
    pub final_state: SimState,
    pub max_self_similar_dev: f64,
    pub max_rh_residual: f64,
    pub max_mass_residual: f64,
    pub min_entropy_margin: f64,
    pub max_modified_background_factor: f64,
    /// Excluded from serialized output so that reports are reproducible.
    #[serde(skip)]
    pub wall_seconds: f64,
}

impl RunResult {
    /// Grid spacing `Δy`.
    pub fn step(&self) -> f64 {
        1.0 / (self.config.grid_points - 1) as f64
    }

    /// Decay fit of [`Record::perturbation`] over the configured window,
    /// ignoring samples below `10·Δy²`.
    pub fn decay_fit(&self) -> Result<DecayFit, SimError> {
        let series: Vec<(f64, f64)> = self.records.iter().map(|r| (r.t, r.perturbation())).collect();
        let h = self.step();
        fit_decay(&series, self.config.fit_window, 10.0 * h * h)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "t,zeta,sigma,sup_dev,self_similar_dev,rh_residual,mass_residual,entropy_margin,continuity,courant\n",
        );
        for (k, r) in self.records.iter().enumerate() {
            if k % self.config.output_every == 0 || k + 1 == self.records.len() {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    r.t,
                    r.zeta,
                    r.sigma,
                    r.sup_dev,
                    r.self_similar_dev,
                    r.rh_residual,
                    r.mass_residual,
                    r.entropy_margin,
                    r.continuity,
                    r.courant
                ));
            }
        }
        out
    }
}

/// Solves the background and integrates to `t_end`.
pub fn run(config: &SimConfig) -> Result<RunResult, SimError> {
    config.validate()?;
    let clock = std::time::Instant::now();
    let gas = config.gas()?;
    let sol = solve_extended(config.b0, &gas, config.n, config.background_grid)?;
    let mut sim = Simulator::init_from_background(&sol, config)?;
    let mut records = vec![sim.record(None)?];
    let mut max_fa = 0.0f64;
    while sim.t() < config.t_end * (1.0 - 1e-14) {
        let prev = sim.shock_snapshot()?;
        let dtau = sim.cfl_step().min((config.t_end / sim.t()).ln());
        sim.step(dtau)?;
        records.push(sim.record(Some(prev))?);
        max_fa = max_fa.max(sim.modified_background_factor()?);
    }
    let fold = |f: fn(&Record) -> f64| records.iter().map(f).fold(0.0, f64::max);
    Ok(RunResult {
        config: config.clone(),
        s0: sol.s0,
        xi0: sol.xi0,
        steps: records.len() - 1,
        max_self_similar_dev: fold(|r| r.self_similar_dev),
        max_rh_residual: fold(|r| r.rh_residual),
        max_mass_residual: fold(|r| r.mass_residual),
        min_entropy_margin: records.iter().map(|r| r.entropy_margin).fold(f64::INFINITY, f64::min),
        max_modified_background_factor: max_fa,
        final_state: sim.state(),
        records,
        wall_seconds: clock.elapsed().as_secs_f64(),
    })
}
