//! Structural checks of the hodograph coefficients on the background:
//! ellipticity of the `T⁻²` layer, the `ψ̂` ODE residual, boundary sign
//! conditions and the local stability condition on the shock.

use super::coeffs::{bernoulli_argument, coeff_a, CoeffSet, HodographState};
use super::psi_hat::PsiHat;
use super::HodographError;
use crate::dual::{Dual, Real};
use crate::gas::GasParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Shock boundary row
/// `G = Hψ − (H−ρ₀)(T∂_Ta₀ + a₀)/(b₀a₁) + Hψ|Za₀|²/(b+ψ)²`
/// as a function of `(ψ, ψ_T, ψ_R)`; angular data are held fixed.
pub fn shock_row<D: Real>(gas: &GasParams, b0: f64, t: f64, st: &HodographState, psi: D, psi_t: D, psi_r: D) -> D {
    let g1 = gas.gamma - 1.0;
    let arg = bernoulli_argument(b0, gas.bernoulli, t, st, psi, psi_t, psi_r);
    let h = (arg * (g1 / (gas.a * gas.gamma))).powf(1.0 / g1);
    let r1 = st.r - 1.0;
    let a0 = psi * r1 + st.b;
    let dta0 = psi_t * r1 + st.b_t;
    let inv_a1 = psi + psi_r * r1;
    let za0_sq: f64 = (0..3).map(|i| (st.zb[i] + r1 * st.zpsi[i]).powi(2)).sum();
    h * psi - (h - gas.rho0) * (dta0 * t + a0) * inv_a1 / b0 + h * psi * (psi + st.b).powf(-2.0) * za0_sq
}

/// `(G, ∂_ψG, ∂_{ψ_T}G, ∂_{ψ_R}G)` at `st`.
pub fn shock_row_gradient(gas: &GasParams, b0: f64, t: f64, st: &HodographState) -> [f64; 4] {
    let c = |v: f64| Dual::constant(v);
    let seed = |v: f64| Dual::new(v, 1.0);
    let (p, pt, pr) = (st.psi, st.psi_t, st.psi_r);
    let g = shock_row(gas, b0, t, st, p, pt, pr);
    let dp = shock_row(gas, b0, t, st, seed(p), c(pt), c(pr)).eps;
    let dt = shock_row(gas, b0, t, st, c(p), seed(pt), c(pr)).eps;
    let dr = shock_row(gas, b0, t, st, c(p), c(pt), seed(pr)).eps;
    [g, dp, dt, dr]
}

/// `(∂_ψH, ∂_{ψ_T}H, ∂_{ψ_R}H)` with `∂H = (ρ/c²)∂A₀`.
pub fn density_gradient(gas: &GasParams, b0: f64, t: f64, st: &HodographState) -> [f64; 3] {
    let c = |v: f64| Dual::constant(v);
    let seed = |v: f64| Dual::new(v, 1.0);
    let (p, pt, pr) = (st.psi, st.psi_t, st.psi_r);
    let arg = bernoulli_argument(b0, gas.bernoulli, t, st, p, pt, pr);
    let rho = gas.enthalpy_inverse_unchecked(arg);
    let factor = rho / ((gas.gamma - 1.0) * arg);
    [
        factor * bernoulli_argument(b0, gas.bernoulli, t, st, seed(p), c(pt), c(pr)).eps,
        factor * bernoulli_argument(b0, gas.bernoulli, t, st, c(p), seed(pt), c(pr)).eps,
        factor * bernoulli_argument(b0, gas.bernoulli, t, st, c(p), c(pt), seed(pr)).eps,
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub pass: bool,
    /// Grid points where `A_{4,2} < 0` or `A_{6,2}` is not negative definite.
    pub failures: usize,
    /// `max_R A_{4,2}` (most negative is best) scaled by `(γ−1)b₀²/(2(s₀−b₀))`.
    pub margin: f64,
    /// `max_R |A_{4,2} / (−(γ−1)b₀²/(2(s₀−b₀))) − 1|`.
    pub a42_deviation: f64,
    /// `max_R max_i |A_{6,2}^{ii} / (−(γ−1)(s₀−b₀)/2) − 1|`.
    pub a62_deviation: f64,
    /// `max_R max_{ij} |A_{6,2}^{ij}|` over `i ≠ j`.
    pub a62_offdiag: f64,
    pub a52_max_abs: f64,
}

fn negative_definite(m: &[[f64; 3]; 3]) -> bool {
    let d1 = -m[0][0];
    let d2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    d1 > 0.0 && d2 > 0.0 && -det > 0.0
}

fn coefficients(ph: &PsiHat, gas: &GasParams, n: usize) -> Result<Vec<CoeffSet>, HodographError> {
    (0..ph.len()).into_par_iter().map(|k| coeff_a(&ph.state(k), gas, ph.b0, n, 1.0)).collect()
}

pub fn check_ellipticity(ph: &PsiHat, gas: &GasParams, n: usize) -> Result<EllipticityReport, HodographError> {
    let g1 = gas.gamma - 1.0;
    let a42_lead = -g1 * ph.b0 * ph.b0 / (2.0 * ph.xi0);
    let a62_lead = -g1 * ph.xi0 / 2.0;
    let sets = coefficients(ph, gas, n)?;
    let mut rep = EllipticityReport {
        pass: true,
        failures: 0,
        margin: f64::NEG_INFINITY,
        a42_deviation: 0.0,
        a62_deviation: 0.0,
        a62_offdiag: 0.0,
        a52_max_abs: 0.0,
    };
    for set in &sets {
        let a42 = set.a4[2];
        let a62 = set.a6[2];
        if !(a42 < 0.0 && negative_definite(&a62)) {
            rep.failures += 1;
        }
        rep.margin = rep.margin.max(a42 / -a42_lead);
        rep.a42_deviation = rep.a42_deviation.max((a42 / a42_lead - 1.0).abs());
        for i in 0..3 {
            rep.a52_max_abs = rep.a52_max_abs.max(set.a5[2][i].abs());
            rep.a62_deviation = rep.a62_deviation.max((a62[i][i] / a62_lead - 1.0).abs());
            for j in 0..3 {
                if i != j {
                    rep.a62_offdiag = rep.a62_offdiag.max(a62[i][j].abs());
                }
            }
        }
    }
    rep.pass = rep.failures == 0;
    Ok(rep)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Residual317 {
    /// `max |A_{4,2}ψ̂'' + A_{7,2}| / b₀²` over interior grid points.
    pub interior: f64,
    /// `|ψ̂'(1)|` from the finite-difference derivative, divided by `b₀`.
    pub neumann: f64,
    /// Shock row `Hψ̂ − (H−ρ₀)(ψ̂+ψ̂'(2))(b₀+ψ̂)/b₀` at `R = 2`, divided by `ρ₊(s₀−b₀)`.
    pub shock: f64,
}

pub fn residual_317(ph: &PsiHat, gas: &GasParams, n: usize) -> Result<Residual317, HodographError> {
    let m = ph.len();
    let interior = (1..m - 1)
        .into_par_iter()
        .map(|k| {
            let set = coeff_a(&ph.state(k), gas, ph.b0, n, 1.0)?;
            Ok((set.a4[2] * ph.d2psi[k] + set.a7[2]).abs())
        })
        .collect::<Result<Vec<f64>, HodographError>>()?
        .into_iter()
        .fold(0.0, f64::max)
        / (ph.b0 * ph.b0);
    let mut st = ph.state(m - 1);
    st.psi_r = ph.dpsi[m - 1];
    let arg = bernoulli_argument(ph.b0, gas.bernoulli, 1.0, &st, st.psi, 0.0, st.psi_r);
    let rho = gas.enthalpy_inverse_unchecked(arg);
    let g = shock_row(gas, ph.b0, 1.0, &st, st.psi, 0.0, st.psi_r);
    Ok(Residual317 { interior, neumann: ph.dpsi[0].abs() / ph.b0, shock: g.abs() / (rho * ph.xi0) })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundarySignsReport {
    pub k_max: usize,
    /// `min_R E_k` over interior grid points, `k = 0..=k_max`.
    pub e_k: Vec<f64>,
    /// Lower bound `(γ−1)b₀/2` required of every `E_k`.
    pub e_bound: f64,
    pub d21: Vec<f64>,
    pub d22: Vec<f64>,
    pub cal_b20: f64,
    pub cal_b21: f64,
    pub cal_b22: [f64; 3],
    pub e_pass: bool,
    pub d21_pass: bool,
    pub d22_pass: Vec<bool>,
    pub b21_pass: bool,
    pub b22_zero: bool,
}

/// `(ψ̂''A_{4,2} + A_{7,2}, ψ̂''(A_{4,1}+A_{4,2}) + A_{7,1} + A_{7,2})` at `T = 1`.
fn composite_maps(st: &HodographState, gas: &GasParams, b0: f64, n: usize, d2: f64) -> Result<(f64, f64), HodographError> {
    let set = coeff_a(st, gas, b0, n, 1.0)?;
    Ok((
        d2 * set.a4[2] + set.a7[2],
        d2 * (set.a4[1] + set.a4[2]) + set.a7[1] + set.a7[2],
    ))
}

/// `E_k` at grid point `k` with centered differences of step `1e-5·ψ̂`.
pub fn e_coefficient(ph: &PsiHat, gas: &GasParams, n: usize, idx: usize, k: usize) -> Result<f64, HodographError> {
    let st = ph.state(idx);
    let d2 = ph.d2psi[idx];
    let delta = 1e-5 * st.psi;
    let mut plus = st;
    let mut minus = st;
    plus.psi += delta;
    minus.psi -= delta;
    let d_psi = (composite_maps(&plus, gas, ph.b0, n, d2)?.0 - composite_maps(&minus, gas, ph.b0, n, d2)?.0) / (2.0 * delta);
    let mut plus = st;
    let mut minus = st;
    plus.psi_t += delta;
    minus.psi_t -= delta;
    let d_pt = (composite_maps(&plus, gas, ph.b0, n, d2)?.1 - composite_maps(&minus, gas, ph.b0, n, d2)?.1) / (2.0 * delta);
    let kf = k as f64;
    Ok(kf * (kf - 1.0) * st.psi + d_psi + kf * d_pt)
}

/// Shock-side coefficients `(𝓑₂₀, 𝓑₂₁, 𝓑₂₂ⁱ)` at `T = 1`: the
/// linearization of the shock row in `∂_Xψ`, `∂_Rψ`, `Zᵢψ`.
pub fn shock_coefficients(ph: &PsiHat, gas: &GasParams) -> (f64, f64, [f64; 3]) {
    let st = ph.state(ph.len() - 1);
    let [_, _, d_t, d_r] = shock_row_gradient(gas, ph.b0, 1.0, &st);
    let delta = 1e-6 * st.psi;
    let b22 = std::array::from_fn(|i| {
        let mut p = st;
        let mut m = st;
        p.zpsi[i] += delta;
        m.zpsi[i] -= delta;
        (shock_row(gas, ph.b0, 1.0, &p, p.psi, p.psi_t, p.psi_r) - shock_row(gas, ph.b0, 1.0, &m, m.psi, m.psi_t, m.psi_r))
            / (2.0 * delta)
    });
    (d_t, d_r, b22)
}

pub fn boundary_signs(ph: &PsiHat, gas: &GasParams, n: usize, k_max: usize) -> Result<BoundarySignsReport, HodographError> {
    let m = ph.len();
    let g1 = gas.gamma - 1.0;
    let mut e_k = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let min = (1..m - 1)
            .into_par_iter()
            .map(|i| e_coefficient(ph, gas, n, i, k))
            .collect::<Result<Vec<f64>, HodographError>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        e_k.push(min);
    }
    let st = ph.state(m - 1);
    let [_, d_psi, d_t, d_r] = shock_row_gradient(gas, ph.b0, 1.0, &st);
    let d21 = vec![d_r; k_max + 1];
    let d22: Vec<f64> = (0..=k_max).map(|k| d_psi + k as f64 * d_t).collect();
    let (cal_b20, cal_b21, cal_b22) = shock_coefficients(ph, gas);
    let e_bound = 0.5 * g1 * ph.b0;
    Ok(BoundarySignsReport {
        k_max,
        e_pass: e_k.iter().all(|&e| e >= e_bound),
        d21_pass: d21.iter().all(|&d| d < 0.0),
        d22_pass: d22.iter().map(|&d| d < 0.0).collect(),
        b21_pass: cal_b21 < 0.0,
        b22_zero: cal_b22.iter().all(|&b| b == 0.0),
        e_k,
        e_bound,
        d21,
        d22,
        cal_b20,
        cal_b21,
        cal_b22,
    })
}

/// Normalized second-order coefficients `𝓐₁ … 𝓐₆` at one state, `T = 1`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CalA {
    pub a1: f64,
    pub a2: f64,
    pub a3: [f64; 3],
    pub a4: f64,
    pub a5: [f64; 3],
    pub a6: [[f64; 3]; 3],
}

pub fn cal_a(st: &HodographState, gas: &GasParams, b0: f64, n: usize) -> Result<CalA, HodographError> {
    let t = 1.0;
    let set = coeff_a(st, gas, b0, n, t)?;
    let c = set.at(t);
    let k = st.psi / set.csq;
    Ok(CalA {
        a1: k * c.a1,
        a2: 0.5 * t * k * c.a2,
        a3: c.a3.map(|v| 0.5 * t * k * v),
        a4: t * t * k * c.a4,
        a5: c.a5.map(|v| 0.5 * t * t * k * v),
        a6: c.a6.map(|row| row.map(|v| t * t * k * v)),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub cal_a_shock: CalA,
    pub cal_b20: f64,
    pub cal_b21: f64,
    pub cal_b22: [f64; 3],
    pub delta0: f64,
    /// First component of `B̃ = 𝓑/𝓑₂₁ + 𝓝/|𝓐₄|`.
    pub timelike: f64,
    /// `−(1/𝓐₄) B̃ M B̃ᵀ`.
    pub quadratic_form: f64,
    /// `quadratic_form / ((γ−1)(s₀−b₀)²/2)`.
    pub form_ratio: f64,
    pub transversal_pass: bool,
    pub timelike_pass: bool,
    pub form_pass: bool,
    pub cross_terms_zero: bool,
    /// Piston-side identities: `𝓐₂`, `𝓐₄ + 𝓑₁₁`, `max|𝓐₅ⁱ + 𝓑₁₂ⁱ|` at `R = 1`.
    pub neumann_a2: f64,
    pub neumann_a4: f64,
    pub neumann_a5: f64,
}

pub fn local_stability(ph: &PsiHat, gas: &GasParams, n: usize) -> Result<StabilityReport, HodographError> {
    let m = ph.len();
    let ca = cal_a(&ph.state(m - 1), gas, ph.b0, n)?;
    let (b20, b21, b22) = shock_coefficients(ph, gas);
    let delta0 = 0.25 * (gas.gamma - 1.0) * ph.xi0 * ph.xi0;

    let cal_b = [b20, b21, b22[0], b22[1], b22[2]];
    let cal_n = [ca.a2, ca.a4, ca.a5[0], ca.a5[1], ca.a5[2]];
    let bt: [f64; 5] = std::array::from_fn(|i| cal_b[i] / b21 + cal_n[i] / ca.a4.abs());
    let mut mm = [[0.0; 5]; 5];
    mm[0][0] = ca.a1;
    mm[0][1] = ca.a2;
    mm[1][0] = ca.a2;
    mm[1][1] = ca.a4;
    for i in 0..3 {
        mm[0][2 + i] = ca.a3[i];
        mm[2 + i][0] = ca.a3[i];
        mm[1][2 + i] = ca.a5[i];
        mm[2 + i][1] = ca.a5[i];
        for j in 0..3 {
            mm[2 + i][2 + j] = ca.a6[i][j];
        }
    }
    let mut form = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            form += bt[i] * mm[i][j] * bt[j];
        }
    }
    let form = -form / ca.a4;

    let piston = ph.state(0);
    let ca1 = cal_a(&piston, gas, ph.b0, n)?;
    let b11 = 1.0 + piston.zb.iter().map(|z| z * z).sum::<f64>() / (piston.b * piston.b);
    let b12: [f64; 3] = std::array::from_fn(|i| -piston.psi * piston.zb[i] / (piston.b * piston.b));

    Ok(StabilityReport {
        cal_a_shock: ca,
        cal_b20: b20,
        cal_b21: b21,
        cal_b22: b22,
        delta0,
        timelike: bt[0],
        quadratic_form: form,
        form_ratio: form / (0.5 * (gas.gamma - 1.0) * ph.xi0 * ph.xi0),
        transversal_pass: b21.abs() > delta0,
        timelike_pass: bt[0] > delta0,
        form_pass: form > delta0,
        cross_terms_zero: b22.iter().chain(ca.a5.iter()).all(|&v| v == 0.0),
        neumann_a2: ca1.a2.abs(),
        neumann_a4: (ca1.a4 + b11).abs(),
        neumann_a5: (0..3).map(|i| (ca1.a5[i] + b12[i]).abs()).fold(0.0, f64::max),
    })
}

/// Coefficient table keyed by `R`: `R, psi, A42, A62, A72, csq, H`.
pub fn coefficient_table_csv(ph: &PsiHat, gas: &GasParams, n: usize) -> Result<String, HodographError> {
    let sets = coefficients(ph, gas, n)?;
    let mut out = String::from("R,psi,A42,A62,A72,csq,H\n");
    for (k, set) in sets.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            ph.r[k], ph.psi[k], set.a4[2], set.a6[2][0][0], set.a7[2], set.csq, set.density
        ));
    }
    Ok(out)
}
