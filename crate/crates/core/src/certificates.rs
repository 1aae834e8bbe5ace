//! Energy-multiplier certificates on the background.
//!
//! The linearized operator about the background has radial coefficients
//! `P₁ … P₅(s)`. With the multiplier `A∂_t + B∂_r`, `A = t^μ r`,
//! `B = t^{μ+1}b_σ(s)`, integration by parts produces the bulk quadratic
//! form `K₀₀G_t² + K₀ᵣG_tG_r + KᵣᵣG_r² + K_nn|ZG|²` and a shock-boundary
//! form with coefficients `β`. A certificate evaluates both on the
//! background and records every sign condition.

use crate::background::{solve_extended, BackgroundError, SelfSimilarSolution, DEFAULT_GRID};
use crate::gas::GasParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error(transparent)]
    Background(#[from] BackgroundError),
    #[error("degenerate shock: boundary coefficient B1 = {b1:e}")]
    DegenerateShock { b1: f64 },
    #[error("non-finite trace value at t = {t}")]
    NonFinite { t: f64 },
    #[error("{0}")]
    Input(String),
}

fn check_dimension(n: usize) -> Result<(), CertificateError> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(CertificateError::Input(format!("dimension must be 2 or 3, got {n}")))
    }
}

/// Supremum of admissible decay rates for the perturbation.
pub fn decay_exponent(n: usize, gamma: f64) -> Result<f64, CertificateError> {
    check_dimension(n)?;
    Ok(if n == 3 {
        1.5 - 0.25 * ((gamma + 7.0) / 2.0).sqrt()
    } else {
        1.25 - 0.25 * ((gamma + 1.0) / 2.0).sqrt()
    })
}

/// Tilt constant of `b_σ`: `e` for `n = 3`, `e₁` for `n = 2`.
pub fn multiplier_e(n: usize, gamma: f64) -> Result<f64, CertificateError> {
    check_dimension(n)?;
    Ok(if n == 3 {
        0.5 * ((gamma + 7.0) / 2.0).sqrt() - 1.0
    } else {
        0.5 * ((gamma + 1.0) / 2.0).sqrt() - 0.5
    })
}

/// Open interval of admissible weight exponents `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuWindow {
    pub lower: f64,
    pub upper: f64,
}

impl MuWindow {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, mu: f64) -> bool {
        mu > self.lower && mu < self.upper
    }
}

pub fn admissible_mu(n: usize, gamma: f64) -> Result<MuWindow, CertificateError> {
    check_dimension(n)?;
    Ok(if n == 3 {
        MuWindow { lower: -4.0, upper: -1.0 - 0.5 * ((gamma + 7.0) / 2.0).sqrt() }
    } else {
        MuWindow { lower: -3.0, upper: -0.5 - 0.5 * ((gamma + 1.0) / 2.0).sqrt() }
    })
}

/// Radial coefficients of the linearized operator on the background grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PCoeffs {
    pub s: Vec<f64>,
    pub p: [Vec<f64>; 5],
    /// `dP_k/ds`, from the ODE and its derivative.
    pub dp: [Vec<f64>; 5],
    /// `max |P₂ / ((3−γ)b₀²/2) − 1|`.
    pub p2_deviation: f64,
    /// `max |P₅ / (−(γ−1)(n−1)b₀²/2) − 1|`.
    pub p5_deviation: f64,
    pub p2_positive: bool,
    pub p3_positive: bool,
    pub p5_negative: bool,
}

/// `(P, P')` at one node.
fn p_at(sol: &SelfSimilarSolution, i: usize) -> ([f64; 5], [f64; 5]) {
    let g1 = sol.gas.gamma - 1.0;
    let gp1 = sol.gas.gamma + 1.0;
    let nm1 = (sol.n - 1) as f64;
    let (s, u, rho) = (sol.s[i], sol.u[i], sol.rho[i]);
    let c2 = sol.csq(i);
    let (drho, du) = sol.derivatives(i);
    let (_, d2u) = sol.second_derivatives(i);
    let dc2 = g1 * c2 * drho / rho;
    let p = [
        u,
        u * u - c2,
        c2,
        g1 * (nm1 * u + s * du),
        nm1 * g1 * u * u - nm1 * c2 - 2.0 * s * s * du + gp1 * s * u * du,
    ];
    let dp = [
        du,
        2.0 * u * du - dc2,
        dc2,
        g1 * (nm1 * du + du + s * d2u),
        2.0 * nm1 * g1 * u * du - nm1 * dc2 - 4.0 * s * du - 2.0 * s * s * d2u
            + gp1 * (u * du + s * du * du + s * u * d2u),
    ];
    (p, dp)
}

pub fn p_coeffs(sol: &SelfSimilarSolution) -> PCoeffs {
    let gamma = sol.gas.gamma;
    let b0 = sol.b0;
    let p2_lead = 0.5 * (3.0 - gamma) * b0 * b0;
    let p5_lead = -0.5 * (gamma - 1.0) * (sol.n - 1) as f64 * b0 * b0;
    let mut out = PCoeffs {
        s: Vec::new(),
        p: Default::default(),
        dp: Default::default(),
        p2_deviation: 0.0,
        p5_deviation: 0.0,
        p2_positive: true,
        p3_positive: true,
        p5_negative: true,
    };
    for i in sol.interior() {
        let (p, dp) = p_at(sol, i);
        out.s.push(sol.s[i]);
        for k in 0..5 {
            out.p[k].push(p[k]);
            out.dp[k].push(dp[k]);
        }
        out.p2_deviation = out.p2_deviation.max((p[1] / p2_lead - 1.0).abs());
        out.p5_deviation = out.p5_deviation.max((p[4] / p5_lead - 1.0).abs());
        out.p2_positive &= p[1] > 0.0;
        out.p3_positive &= p[2] > 0.0;
        out.p5_negative &= p[4] < 0.0;
    }
    out
}

/// Shock boundary condition `B₁∂_rφ̇ + B₂∂_tφ̇ + B₃ξ = …` and its
/// normalized form `∂_rφ̇ + μ₁∂_tφ̇ + μ₂ξ = …`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundaryCoeffs {
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub mu1: f64,
    pub mu2: f64,
    /// `−∫₀¹ û(s₀ + τδ) dτ` for a shock displacement `δ = 10⁻³(s₀−b₀)`; negative.
    pub mu3: f64,
    /// `μ₁ / (1/(2b₀))`.
    pub mu1_ratio: f64,
    /// `μ₂ / (−(n−1)/2)`.
    pub mu2_ratio: f64,
}

pub fn boundary_coeffs(sol: &SelfSimilarSolution) -> Result<BoundaryCoeffs, CertificateError> {
    let i = sol.shock_index;
    let (rho, u, c2) = (sol.rho[i], sol.u[i], sol.csq(i));
    let rho0 = sol.gas.rho0;
    // ½û² − h(ρ̂) + h(ρ₀) at s₀ equals −û(s₀−û) by the Bernoulli law;
    // the product form avoids cancelling two O(b₀²) enthalpies.
    let x = -u * sol.w[i];
    let (drho, du) = sol.derivatives(i);
    let b1 = 2.0 * rho * u - rho * u * x / c2;
    let b2 = rho - rho0 - rho * x / c2;
    let b3 = 2.0 * rho * u * du + drho * x - (rho - rho0) * (u * du + c2 * drho / rho);
    if !(b1.abs() > 1e-300) || !b1.is_finite() {
        return Err(CertificateError::DegenerateShock { b1 });
    }
    // Gauss–Legendre (5 points) on [s₀, s₀ + δ].
    let delta = 1e-3 * sol.xi0;
    const NODES: [f64; 5] = [-0.906179845938664, -0.5384693101056831, 0.0, 0.5384693101056831, 0.906179845938664];
    const WEIGHTS: [f64; 5] = [0.23692688505618908, 0.47862867049936647, 0.5688888888888889, 0.47862867049936647, 0.23692688505618908];
    let mut mu3 = 0.0;
    for (x, w) in NODES.iter().zip(WEIGHTS) {
        let tau = 0.5 * (x + 1.0);
        mu3 -= 0.5 * w * sol.eval_xi(sol.xi0 + tau * delta)?.u;
    }
    let mu1 = b2 / b1;
    let mu2 = b3 / b1;
    Ok(BoundaryCoeffs {
        b1,
        b2,
        b3,
        mu1,
        mu2,
        mu3,
        mu1_ratio: mu1 * 2.0 * sol.b0,
        mu2_ratio: mu2 / (-0.5 * (sol.n - 1) as f64),
    })
}

/// Multiplier `A = t^μ r a(s)`, `B = t^{μ+1} b_σ(s)` with `a ≡ 1` and
/// `b_σ = s²(1 + e(s−b₀)/b₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierChoice {
    pub n: usize,
    pub mu: f64,
    pub e: f64,
    pub b0: f64,
}

/// Multiplier values and first derivatives at `(t, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierFields {
    pub a: f64,
    pub a_t: f64,
    pub a_r: f64,
    pub b: f64,
    pub b_t: f64,
    pub b_r: f64,
}

impl MultiplierChoice {
    pub fn new(n: usize, gamma: f64, b0: f64, mu: f64) -> Result<Self, CertificateError> {
        Ok(MultiplierChoice { n, mu, e: multiplier_e(n, gamma)?, b0 })
    }

    pub fn b_sigma(&self, s: f64) -> f64 {
        s * s * (1.0 + self.e * (s - self.b0) / self.b0)
    }

    pub fn b_sigma_prime(&self, s: f64) -> f64 {
        2.0 * s * (1.0 + self.e * (s - self.b0) / self.b0) + s * s * self.e / self.b0
    }

    pub fn fields(&self, t: f64, r: f64) -> MultiplierFields {
        let mu = self.mu;
        let s = r / t;
        let (bs, dbs) = (self.b_sigma(s), self.b_sigma_prime(s));
        MultiplierFields {
            a: t.powf(mu) * r,
            a_t: mu * t.powf(mu - 1.0) * r,
            a_r: t.powf(mu),
            b: t.powf(mu + 1.0) * bs,
            b_t: (mu + 1.0) * t.powf(mu) * bs - t.powf(mu + 1.0) * dbs * r / (t * t),
            b_r: t.powf(mu + 1.0) * dbs / t,
        }
    }
}

/// `(K₀₀, K₀ᵣ, Kᵣᵣ, K_nn)` at `(t, r = st)` from `P(s)` and `P'(s)`.
pub fn k_raw(choice: &MultiplierChoice, t: f64, s: f64, p: &[f64; 5], dp: &[f64; 5]) -> [f64; 4] {
    let r = s * t;
    let nm1 = (choice.n - 1) as f64;
    let f = choice.fields(t, r);
    let pt = |k: usize| -dp[k] * r / (t * t);
    let pr = |k: usize| dp[k] / t;
    let dr_a = |k: usize| f.a_r * p[k] + f.a * pr(k);
    let dt_a = |k: usize| f.a_t * p[k] + f.a * pt(k);
    let dr_b = |k: usize| f.b_r * p[k] + f.b * pr(k);
    let dt_b = |k: usize| f.b_t * p[k] + f.b * pt(k);
    let k00 = -0.5 * f.a_t + 0.5 * f.b_r - dr_a(0) + f.a * p[3] / r + nm1 * f.b / (2.0 * r) - nm1 * f.a * p[0] / r;
    let k0r = -f.b_t - dr_a(1) + f.a * p[4] / r + f.b * p[3] / r - nm1 * f.a * p[1] / r;
    let krr = -dt_b(0) + 0.5 * dt_a(1) - 0.5 * dr_b(1) + f.b * p[4] / r - nm1 * f.b * p[1] / (2.0 * r);
    let dr_b3_over_r2 = dr_b(2) / (r * r) - 2.0 * f.b * p[2] / (r * r * r);
    let knn = -dt_a(2) / (2.0 * r * r) - 0.5 * dr_b3_over_r2 - nm1 * f.b * p[2] / (2.0 * r * r * r);
    [k00, k0r, krr, knn]
}

/// Min and max of one sampled quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(v: &[f64]) -> Range {
        Range {
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Sampled bulk coefficients, divided by `t^μ`; `K_nn` is reported as `r²K_nn/t^μ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KTable {
    pub s: Vec<f64>,
    pub k00: Vec<f64>,
    pub k0r: Vec<f64>,
    pub krr: Vec<f64>,
    pub knn: Vec<f64>,
    pub discriminant: Vec<f64>,
    /// Largest relative deviation of `K(t)/t^μ` from `K(1)` over `t ∈ {2, 4}`.
    pub t_scaling_error: f64,
    pub k00_positive: bool,
    pub discriminant_negative: bool,
    pub knn_positive: bool,
    /// Ratios to the large-`b₀` leading orders, at the shock node.
    pub leading_ratios: [f64; 5],
}

/// Leading orders of `(K₀₀, K₀ᵣ, Kᵣᵣ, r²K_nn, disc)` for large `b₀`.
pub fn k_leading(choice: &MultiplierChoice, gamma: f64) -> [f64; 5] {
    let (mu, e, b0) = (choice.mu, choice.e, choice.b0);
    let g1 = gamma - 1.0;
    let x = e - mu;
    if choice.n == 3 {
        [
            0.5 * (2.0 + e - mu) * b0,
            (0.5 * (gamma + 3.0) + x) * b0 * b0,
            (0.25 * (gamma + 1.0) * x + 1.0) * b0.powi(3),
            -0.25 * g1 * (2.0 + e + mu) * b0.powi(3),
            0.25 * g1 * (gamma + 7.0 - 2.0 * x * x) * b0.powi(4),
        ]
    } else {
        [
            0.5 * (1.0 + e - mu) * b0,
            (0.5 * (gamma + 1.0) + x) * b0 * b0,
            0.25 * (gamma + 1.0) * (1.0 + x) * b0.powi(3),
            -0.25 * g1 * (1.0 + e + mu) * b0.powi(3),
            0.25 * g1 * (gamma + 1.0 - 2.0 * x * x) * b0.powi(4),
        ]
    }
}

pub fn k_coeffs(pc: &PCoeffs, choice: &MultiplierChoice, gamma: f64) -> KTable {
    let m = pc.s.len();
    let at = |t: f64, i: usize| {
        let p: [f64; 5] = std::array::from_fn(|k| pc.p[k][i]);
        let dp: [f64; 5] = std::array::from_fn(|k| pc.dp[k][i]);
        let s = pc.s[i];
        let mut k = k_raw(choice, t, s, &p, &dp);
        let scale = t.powf(choice.mu);
        for v in k.iter_mut() {
            *v /= scale;
        }
        k[3] *= (s * t) * (s * t);
        k
    };
    let mut tab = KTable {
        s: pc.s.clone(),
        k00: Vec::with_capacity(m),
        k0r: Vec::with_capacity(m),
        krr: Vec::with_capacity(m),
        knn: Vec::with_capacity(m),
        discriminant: Vec::with_capacity(m),
        t_scaling_error: 0.0,
        k00_positive: true,
        discriminant_negative: true,
        knn_positive: true,
        leading_ratios: [0.0; 5],
    };
    for i in 0..m {
        let k = at(1.0, i);
        for t in [2.0, 4.0] {
            let kt = at(t, i);
            for j in 0..4 {
                let err = (kt[j] - k[j]).abs() / k[j].abs().max(f64::MIN_POSITIVE);
                tab.t_scaling_error = tab.t_scaling_error.max(err);
            }
        }
        let disc = k[1] * k[1] - 4.0 * k[0] * k[2];
        tab.k00_positive &= k[0] > 0.0;
        tab.discriminant_negative &= disc < 0.0;
        tab.knn_positive &= k[3] > 0.0;
        tab.k00.push(k[0]);
        tab.k0r.push(k[1]);
        tab.krr.push(k[2]);
        tab.knn.push(k[3]);
        tab.discriminant.push(disc);
    }
    let lead = k_leading(choice, gamma);
    let last = m - 1;
    let values = [tab.k00[last], tab.k0r[last], tab.krr[last], tab.knn[last], tab.discriminant[last]];
    tab.leading_ratios = std::array::from_fn(|j| values[j] / lead[j]);
    tab
}

/// Shock-boundary quadratic form `β₁₁G_t² + β₁₂G_tG_r + β₁₃G_r² + β₁₄|ZG|²/r²`
/// (per `t^{μ+1}`) and its reduction by the boundary condition
/// `G_r = −μ₁G_t + …`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShockFluxBetas {
    pub beta11: f64,
    pub beta12: f64,
    pub beta13: f64,
    pub beta14: f64,
    pub reduced11: f64,
    pub reduced12: f64,
    pub reduced13: f64,
    pub reduced14: f64,
    /// `reduced11 / ((γ−1)b₀²/8)`.
    pub ratio11: f64,
    /// `reduced13 / (−(γ−1)b₀⁴/2)`.
    pub ratio13: f64,
}

/// Flux `N^0 + ûN^1 − G_rN^2 − s₀N_0` through the shock for a gradient
/// `(G_t, G_r, |ZG|/r)`, divided by `t^{μ+1}`.
pub fn shock_flux(choice: &MultiplierChoice, s0: f64, u: f64, c2: f64, gt: f64, gr: f64, zg: f64) -> f64 {
    let s = s0;
    let b = choice.b_sigma(s);
    let z2 = zg * zg;
    let n_lower0 = 0.5 * s * gt * gt + b * gt * gr + b * u * gr * gr - 0.5 * s * (u * u - c2) * gr * gr + 0.5 * s * c2 * z2;
    let n_upper0 = -0.5 * b * gt * gt - b * u * gt * gr - 0.5 * b * u * u * gr * gr + 0.5 * b * c2 * (gr * gr + z2);
    let n1 = s * gt * gt + b * gt * gr + b * u * gr * gr + s * u * gt * gr;
    let n2 = s * c2 * gt + b * c2 * gr;
    n_upper0 + u * n1 - gr * n2 - s0 * n_lower0
}

pub fn shock_betas(sol: &SelfSimilarSolution, choice: &MultiplierChoice, bc: &BoundaryCoeffs) -> ShockFluxBetas {
    let i = sol.shock_index;
    let (s0, u, c2) = (sol.s0, sol.u[i], sol.csq(i));
    let b = choice.b_sigma(s0);
    let beta11 = -0.5 * b + u * s0 - 0.5 * s0 * s0;
    let beta12 = s0 * (u * u - c2 - b);
    let beta13 = 0.5 * b * u * u - 0.5 * b * c2 - s0 * b * u + 0.5 * s0 * s0 * (u * u - c2);
    let beta14 = 0.5 * c2 * (b - s0 * s0);
    let mu1 = bc.mu1;
    let reduced11 = beta11 - mu1 * beta12 + mu1 * mu1 * beta13;
    let g1 = sol.gas.gamma - 1.0;
    let b0 = sol.b0;
    ShockFluxBetas {
        beta11,
        beta12,
        beta13,
        beta14,
        reduced11,
        reduced12: beta12 - 2.0 * mu1 * beta13,
        reduced13: beta13,
        reduced14: beta14,
        ratio11: reduced11 / (g1 * b0 * b0 / 8.0),
        ratio13: beta13 / (-0.5 * g1 * b0.powi(4)),
    }
}

/// Closed-form conditions on `(n, γ, μ)` alone.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SymbolicConditions {
    pub in_window: bool,
    /// `2+e−μ > 0` (`1+e₁−μ` for `n = 2`).
    pub k00_condition: bool,
    /// `2+e+μ < 0` (`1+e₁+μ` for `n = 2`).
    pub knn_condition: bool,
    /// `γ+7−2(e−μ)² < 0` (`γ+1−2(e₁−μ)²` for `n = 2`).
    pub discriminant_condition: bool,
}

impl SymbolicConditions {
    pub fn all(&self) -> bool {
        self.in_window && self.k00_condition && self.knn_condition && self.discriminant_condition
    }
}

pub fn symbolic_conditions(n: usize, gamma: f64, mu: f64) -> Result<SymbolicConditions, CertificateError> {
    let e = multiplier_e(n, gamma)?;
    let window = admissible_mu(n, gamma)?;
    let (shift, g) = if n == 3 { (2.0, gamma + 7.0) } else { (1.0, gamma + 1.0) };
    Ok(SymbolicConditions {
        in_window: window.contains(mu),
        k00_condition: shift + e - mu > 0.0,
        knn_condition: shift + e + mu < 0.0,
        discriminant_condition: g - 2.0 * (e - mu) * (e - mu) < 0.0,
    })
}

/// Below this piston speed the background is outside the regime where
/// the leading-order signs are proved; checks still run.
pub const ASYMPTOTIC_B0: f64 = 40.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KSummary {
    pub k00: Range,
    pub k0r: Range,
    pub krr: Range,
    pub knn: Range,
    pub discriminant: Range,
    pub t_scaling_error: f64,
    pub leading_ratios: [f64; 5],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateFlags {
    pub symbolic: bool,
    pub k00_positive: bool,
    pub discriminant_negative: bool,
    pub knn_positive: bool,
    pub reduced11_positive: bool,
    pub reduced13_negative: bool,
    pub reduced14_positive: bool,
    pub mu1_positive: bool,
    pub mu2_negative: bool,
    pub mu3_negative: bool,
    pub b1_positive: bool,
}

impl CertificateFlags {
    pub fn all(&self) -> bool {
        self.symbolic
            && self.k00_positive
            && self.discriminant_negative
            && self.knn_positive
            && self.reduced11_positive
            && self.reduced13_negative
            && self.reduced14_positive
            && self.mu1_positive
            && self.mu2_negative
            && self.mu3_negative
            && self.b1_positive
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplierCertificate {
    pub n: usize,
    pub gamma: f64,
    pub a: f64,
    pub b0: f64,
    pub choice: MultiplierChoice,
    pub window: MuWindow,
    pub decay_exponent: f64,
    pub asymptotic_regime: bool,
    pub symbolic: SymbolicConditions,
    pub p_coeffs: PSummary,
    pub boundary: BoundaryCoeffs,
    pub betas: ShockFluxBetas,
    pub k: KSummary,
    pub flags: CertificateFlags,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PSummary {
    pub p2_deviation: f64,
    pub p5_deviation: f64,
    pub p2_positive: bool,
    pub p3_positive: bool,
    pub p5_negative: bool,
}

/// Builds the certificate on an already solved, extended background.
pub fn certify_background(sol: &SelfSimilarSolution, mu: f64) -> Result<MultiplierCertificate, CertificateError> {
    let (n, gamma) = (sol.n, sol.gas.gamma);
    let choice = MultiplierChoice::new(n, gamma, sol.b0, mu)?;
    let symbolic = symbolic_conditions(n, gamma, mu)?;
    let pc = p_coeffs(sol);
    let table = k_coeffs(&pc, &choice, gamma);
    let boundary = boundary_coeffs(sol)?;
    let betas = shock_betas(sol, &choice, &boundary);
    let flags = CertificateFlags {
        symbolic: symbolic.all(),
        k00_positive: table.k00_positive,
        discriminant_negative: table.discriminant_negative,
        knn_positive: table.knn_positive,
        reduced11_positive: betas.reduced11 > 0.0,
        reduced13_negative: betas.reduced13 < 0.0,
        reduced14_positive: betas.reduced14 > 0.0,
        mu1_positive: boundary.mu1 > 0.0,
        mu2_negative: boundary.mu2 < 0.0,
        mu3_negative: boundary.mu3 < 0.0,
        b1_positive: boundary.b1 > 0.0,
    };
    Ok(MultiplierCertificate {
        n,
        gamma,
        a: sol.gas.a,
        b0: sol.b0,
        choice,
        window: admissible_mu(n, gamma)?,
        decay_exponent: decay_exponent(n, gamma)?,
        asymptotic_regime: sol.b0 >= ASYMPTOTIC_B0,
        symbolic,
        p_coeffs: PSummary {
            p2_deviation: pc.p2_deviation,
            p5_deviation: pc.p5_deviation,
            p2_positive: pc.p2_positive,
            p3_positive: pc.p3_positive,
            p5_negative: pc.p5_negative,
        },
        boundary,
        betas,
        k: KSummary {
            k00: Range::of(&table.k00),
            k0r: Range::of(&table.k0r),
            krr: Range::of(&table.krr),
            knn: Range::of(&table.knn),
            discriminant: Range::of(&table.discriminant),
            t_scaling_error: table.t_scaling_error,
            leading_ratios: table.leading_ratios,
        },
        pass: flags.all(),
        flags,
    })
}

pub fn certify(n: usize, gas: &GasParams, b0: f64, mu: f64) -> Result<MultiplierCertificate, CertificateError> {
    check_dimension(n)?;
    let sol = solve_extended(b0, gas, n, DEFAULT_GRID)?;
    certify_background(&sol, mu)
}

/// Independent certificates in parallel.
pub fn certify_batch(cases: &[(usize, GasParams, f64, f64)]) -> Vec<Result<MultiplierCertificate, CertificateError>> {
    cases.par_iter().map(|(n, gas, b0, mu)| certify(*n, gas, *b0, *mu)).collect()
}

/// Integration-by-parts identity behind the weighted Hardy inequality.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HardyCheck {
    /// `∫₁ᵀ t^{μ−1}φ²`.
    pub weighted_l2: f64,
    /// `(1/μ)[t^μφ²]₁ᵀ − (2/μ)∫₁ᵀ t^μφφ'`.
    pub by_parts: f64,
    pub residual: f64,
    /// `|I_h − I_{2h}|/15` summed over both integrals.
    pub quadrature_error: f64,
    /// `(2/|μ|)(∫t^{μ−1}φ²)^{1/2}(∫t^{μ+1}φ'²)^{1/2} + (φ(1)² − T^μφ(T)²)/|μ|`.
    pub hardy_bound: f64,
    pub inequality_holds: bool,
}

/// Composite Simpson in `x = ln t` on `panels` (even) panels, at full and
/// half resolution.
fn simpson_log<F: Fn(f64) -> f64>(f: F, t_end: f64, panels: usize) -> (f64, f64) {
    let x_end = t_end.ln();
    let h = x_end / panels as f64;
    let vals: Vec<f64> = (0..=panels).map(|k| {
        let t = (k as f64 * h).exp();
        f(t) * t
    }).collect();
    let rule = |stride: usize| {
        let hh = h * stride as f64;
        let m = panels / stride;
        let mut sum = vals[0] + vals[panels];
        for k in 1..m {
            sum += if k % 2 == 1 { 4.0 } else { 2.0 } * vals[k * stride];
        }
        sum * hh / 3.0
    };
    (rule(1), rule(2))
}

/// Checks the identity and the inequality for a trace given by
/// `trace(t) = (φ(t), φ'(t))` on `[1, t_end]`, with `points` Simpson nodes.
pub fn hardy_identity_check<F>(trace: F, mu: f64, t_end: f64, points: usize) -> Result<HardyCheck, CertificateError>
where
    F: Fn(f64) -> (f64, f64) + Sync,
{
    if !(mu < -1.0) {
        return Err(CertificateError::Input(format!("weight exponent must be below -1, got {mu}")));
    }
    if !(t_end > 1.0) || points < 5 {
        return Err(CertificateError::Input("need t_end > 1 and at least 5 points".into()));
    }
    let panels = ((points - 1) / 4) * 4;
    for k in 0..=panels {
        let t = (k as f64 * t_end.ln() / panels as f64).exp();
        let (p, dp) = trace(t);
        if !p.is_finite() || !dp.is_finite() {
            return Err(CertificateError::NonFinite { t });
        }
    }
    let (l2, l2_half) = simpson_log(|t| t.powf(mu - 1.0) * trace(t).0.powi(2), t_end, panels);
    let (cross, cross_half) = simpson_log(|t| {
        let (p, dp) = trace(t);
        t.powf(mu) * p * dp
    }, t_end, panels);
    let (grad, _) = simpson_log(|t| t.powf(mu + 1.0) * trace(t).1.powi(2), t_end, panels);
    let (p1, _) = trace(1.0);
    let (pt, _) = trace(t_end);
    let boundary = t_end.powf(mu) * pt * pt - p1 * p1;
    let by_parts = boundary / mu - 2.0 / mu * cross;
    let hardy_bound = 2.0 / mu.abs() * (l2 * grad).sqrt() - boundary / mu.abs();
    Ok(HardyCheck {
        weighted_l2: l2,
        by_parts,
        residual: (l2 - by_parts).abs(),
        quadrature_error: ((l2 - l2_half).abs() + 2.0 / mu.abs() * (cross - cross_half).abs()) / 15.0,
        hardy_bound,
        inequality_holds: l2 <= hardy_bound * (1.0 + 1e-12) + 1e-300,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn air() -> GasParams {
        GasParams::new(1.0, 1.4, 1.0).unwrap()
    }

    #[test]
    fn closed_form_constants() {
        assert!((decay_exponent(3, 1.4).unwrap() - 0.98765).abs() < 1e-5);
        assert!((decay_exponent(2, 1.4).unwrap() - 0.97613).abs() < 1e-5);
        assert!((multiplier_e(3, 1.4).unwrap() - 0.024695).abs() < 1e-6);
        assert!((multiplier_e(2, 1.4).unwrap() - 0.047722).abs() < 1e-6);
        let w = admissible_mu(3, 1.4).unwrap();
        assert!((w.upper + 2.02470).abs() < 1e-5 && w.lower == -4.0);
        let w = admissible_mu(2, 1.4).unwrap();
        assert!((w.upper + 1.04772).abs() < 1e-5 && w.lower == -3.0);
        assert!(decay_exponent(4, 1.4).is_err());
    }

    #[test]
    fn multiplier_derivatives_match_finite_differences() {
        let c = MultiplierChoice::new(3, 1.4, 10.0, -2.5).unwrap();
        let (t, r) = (1.7, 18.3);
        let f = c.fields(t, r);
        let h = 1e-5;
        let a = |t: f64, r: f64| c.fields(t, r).a;
        let b = |t: f64, r: f64| c.fields(t, r).b;
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-7 * y.abs().max(1.0);
        assert!(close((a(t + h, r) - a(t - h, r)) / (2.0 * h), f.a_t));
        assert!(close((a(t, r + h) - a(t, r - h)) / (2.0 * h), f.a_r));
        assert!(close((b(t + h, r) - b(t - h, r)) / (2.0 * h), f.b_t));
        assert!(close((b(t, r + h) - b(t, r - h)) / (2.0 * h), f.b_r));
    }

    #[test]
    fn k_table_matches_finite_difference_divergence_terms() {
        // Against a direct evaluation with numerically differentiated products.
        let c = MultiplierChoice::new(3, 1.4, 10.0, -2.5).unwrap();
        let poly = |k: usize, s: f64| (k as f64 + 1.0) * s * s - 0.3 * s + k as f64;
        let dpoly = |k: usize, s: f64| 2.0 * (k as f64 + 1.0) * s - 0.3;
        let (t, s) = (1.3, 10.2);
        let p: [f64; 5] = std::array::from_fn(|k| poly(k, s));
        let dp: [f64; 5] = std::array::from_fn(|k| dpoly(k, s));
        let k = k_raw(&c, t, s, &p, &dp);
        let r = s * t;
        let h = 1e-5;
        let ap = |k: usize, t: f64, r: f64| c.fields(t, r).a * poly(k, r / t);
        let bp = |k: usize, t: f64, r: f64| c.fields(t, r).b * poly(k, r / t);
        let dt = |g: &dyn Fn(f64, f64) -> f64| (g(t + h, r) - g(t - h, r)) / (2.0 * h);
        let dr = |g: &dyn Fn(f64, f64) -> f64| (g(t, r + h) - g(t, r - h)) / (2.0 * h);
        let f = c.fields(t, r);
        let k00 = -0.5 * f.a_t + 0.5 * f.b_r - dr(&|t, r| ap(0, t, r)) + f.a * p[3] / r + f.b / r - 2.0 * f.a * p[0] / r;
        let knn = -dt(&|t, r| ap(2, t, r)) / (2.0 * r * r) - 0.5 * dr(&|t, r| bp(2, t, r) / (r * r)) - f.b * p[2] / (r * r * r);
        assert!((k00 - k[0]).abs() <= 1e-6 * k00.abs());
        assert!((knn - k[3]).abs() <= 1e-6 * knn.abs());
    }

    #[test]
    fn shock_flux_polarization_gives_betas() {
        let sol = solve_extended(20.0, &air(), 3, 512).unwrap();
        let c = MultiplierChoice::new(3, 1.4, 20.0, -2.5).unwrap();
        let bc = boundary_coeffs(&sol).unwrap();
        let b = shock_betas(&sol, &c, &bc);
        let i = sol.shock_index;
        let q = |gt, gr, z| shock_flux(&c, sol.s0, sol.u[i], sol.csq(i), gt, gr, z);
        let scale = b.beta13.abs();
        assert!((q(1.0, 0.0, 0.0) - b.beta11).abs() <= 1e-12 * scale);
        assert!((q(0.0, 1.0, 0.0) - b.beta13).abs() <= 1e-12 * scale);
        assert!((q(0.0, 0.0, 1.0) - b.beta14).abs() <= 1e-12 * scale);
        let mixed = q(1.0, 1.0, 0.0) - b.beta11 - b.beta13;
        assert!((mixed - b.beta12).abs() <= 1e-12 * scale);
    }

    #[test]
    fn boundary_coefficients_leading_orders() {
        let sol = solve_extended(80.0, &air(), 3, DEFAULT_GRID).unwrap();
        let bc = boundary_coeffs(&sol).unwrap();
        assert!(bc.b1 > 0.0 && bc.mu1 > 0.0 && bc.mu2 < 0.0 && bc.mu3 < 0.0);
        assert!((bc.mu1_ratio - 1.0).abs() < 0.3);
        assert!((bc.mu2_ratio - 1.0).abs() < 0.3);
    }

    #[test]
    fn hardy_identity_on_inverse_trace() {
        let h = hardy_identity_check(|t| (1.0 / t, -1.0 / (t * t)), -2.5, 100.0, 10_001).unwrap();
        assert!(h.residual < 1e-8, "{h:?}");
        let exact = (1.0 - 100f64.powf(-4.5)) / 4.5;
        assert!((h.weighted_l2 - exact).abs() < 1e-10);
        let z = hardy_identity_check(|_| (0.0, 0.0), -2.5, 100.0, 101).unwrap();
        assert_eq!(z.weighted_l2, 0.0);
        assert_eq!(z.by_parts, 0.0);
        let s = hardy_identity_check(|t| (t.sin() / t, t.cos() / t - t.sin() / (t * t)), -3.0, 100.0, 10_001).unwrap();
        assert!(s.inequality_holds);
        assert!(matches!(
            hardy_identity_check(|_| (f64::NAN, 0.0), -2.5, 10.0, 101),
            Err(CertificateError::NonFinite { .. })
        ));
    }
}
