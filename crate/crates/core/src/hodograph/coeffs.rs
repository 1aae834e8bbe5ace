//! Closed-form coefficients of the quasilinear equation for `ψ(T, R, ω)`.
//!
//! The equation reads
//! `A₁ψ_TT + A₂ψ_TR + ΣA₃ⁱψ_TZᵢ + A₄ψ_RR + ΣA₅ⁱψ_RZᵢ + ΣΣA₆ⁱʲψ_ZᵢZⱼ + A₇ = 0`
//! with every `A_k = A_{k,0} + A_{k,1}/T + A_{k,2}/T²`. The `j`-th layer
//! equals `−1/(b₀a₁)` times the `t^{-j}` part of the potential equation in
//! similarity variables, which is how the independent test oracle checks
//! each entry.

use crate::dual::Real;
use crate::gas::GasParams;

use super::HodographError;

/// Smallest admissible `|ψ + (R−1)∂_Rψ|`.
pub const SINGULAR_FLOOR: f64 = 1e-14;

/// Point value of `b`, `ψ` and the derivatives the coefficients depend on.
/// Angular slots are zero on radial states.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HodographState {
    pub b: f64,
    pub b_t: f64,
    pub b_tt: f64,
    /// `Zᵢb`.
    pub zb: [f64; 3],
    /// `∂_T Zᵢb`.
    pub zb_t: [f64; 3],
    /// `ZᵢZⱼb`.
    pub zzb: [[f64; 3]; 3],
    pub r: f64,
    pub psi: f64,
    pub psi_t: f64,
    pub psi_r: f64,
    /// `Zᵢψ`.
    pub zpsi: [f64; 3],
}

impl HodographState {
    /// Radial state with constant piston speed `b0`.
    pub fn radial(b0: f64, r: f64, psi: f64, psi_r: f64) -> Self {
        HodographState { b: b0, r, psi, psi_r, ..Default::default() }
    }
}

/// The auxiliary combinations `a₀ … a₄ⁱ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ACoeffs {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: [f64; 3],
}

pub fn a_coeffs(st: &HodographState) -> Result<ACoeffs, HodographError> {
    let r1 = st.r - 1.0;
    let r2 = st.r - 2.0;
    let den = st.psi + r1 * st.psi_r;
    if !(den.abs() >= SINGULAR_FLOOR) {
        return Err(HodographError::Singular { r: st.r, denominator: den });
    }
    let mut a4 = [0.0; 3];
    for (i, a) in a4.iter_mut().enumerate() {
        *a = st.psi * st.zpsi[i] + st.psi * st.zb[i] + r2 * st.zb[i] * st.psi_r;
    }
    Ok(ACoeffs {
        a0: st.b + r1 * st.psi,
        a1: 1.0 / den,
        a2: st.psi + r2 * st.psi_r,
        a3: st.psi * st.psi_t + st.psi * st.b_t + r2 * st.b_t * st.psi_r,
        a4,
    })
}

/// Bernoulli argument `B₀ − φ − tφ_t + sφ_s − φ_s²/2 − |Zφ|²/(2s²)` written
/// in hodograph variables, generic so that tangents can be propagated
/// through `ψ`, `ψ_T`, `ψ_R`.
#[allow(clippy::too_many_arguments)]
pub fn bernoulli_argument<D: Real>(
    b0: f64,
    bernoulli: f64,
    t: f64,
    st: &HodographState,
    psi: D,
    psi_t: D,
    psi_r: D,
) -> D {
    let r1 = st.r - 1.0;
    let r2 = st.r - 2.0;
    let a0 = psi * r1 + st.b;
    let a1 = (psi + psi_r * r1).powf(-1.0);
    let a2 = psi + psi_r * r2;
    let a3 = psi * psi_t + psi * st.b_t + psi_r * (r2 * st.b_t);
    let a1a2 = a1 * a2;
    let mut zsum = psi * 0.0;
    for i in 0..3 {
        let a4 = psi * (st.zpsi[i] + st.zb[i]) + psi_r * (r2 * st.zb[i]);
        let z = a1 * a4;
        zsum = zsum + z * z;
    }
    -(psi * (b0 * r2)) + bernoulli + a1 * a3 * (t * b0) + a0 * a1a2 * b0
        - a1a2 * a1a2 * (0.5 * b0 * b0)
        - zsum * (a0 * a0).powf(-1.0) * (0.5 * b0 * b0)
}

/// One coefficient split into its `T⁰`, `T⁻¹`, `T⁻²` parts.
pub type Layers<T> = [T; 3];

/// All coefficients of the `ψ` equation at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSet {
    pub a: ACoeffs,
    /// Bernoulli argument `A₀`.
    pub bernoulli_arg: f64,
    pub csq: f64,
    /// Density `H = h⁻¹(A₀)`.
    pub density: f64,
    pub a1: Layers<f64>,
    pub a2: Layers<f64>,
    pub a3: Layers<[f64; 3]>,
    pub a4: Layers<f64>,
    pub a5: Layers<[f64; 3]>,
    pub a6: Layers<[[f64; 3]; 3]>,
    pub a7: Layers<f64>,
}

fn assemble(layers: &Layers<f64>, t: f64) -> f64 {
    layers[0] + layers[1] / t + layers[2] / (t * t)
}

/// Coefficients assembled at a fixed `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assembled {
    pub a1: f64,
    pub a2: f64,
    pub a3: [f64; 3],
    pub a4: f64,
    pub a5: [f64; 3],
    pub a6: [[f64; 3]; 3],
    pub a7: f64,
}

impl CoeffSet {
    pub fn at(&self, t: f64) -> Assembled {
        let vec3 = |l: &Layers<[f64; 3]>| std::array::from_fn(|i| assemble(&[l[0][i], l[1][i], l[2][i]], t));
        Assembled {
            a1: assemble(&self.a1, t),
            a2: assemble(&self.a2, t),
            a3: vec3(&self.a3),
            a4: assemble(&self.a4, t),
            a5: vec3(&self.a5),
            a6: std::array::from_fn(|i| {
                std::array::from_fn(|j| assemble(&[self.a6[0][i][j], self.a6[1][i][j], self.a6[2][i][j]], t))
            }),
            a7: assemble(&self.a7, t),
        }
    }
}

/// Physical coefficients: `c² = (γ−1)A₀` and `H = h⁻¹(A₀)` at time `T = t`.
pub fn coeff_a(st: &HodographState, gas: &GasParams, b0: f64, n: usize, t: f64) -> Result<CoeffSet, HodographError> {
    let arg = bernoulli_argument(b0, gas.bernoulli, t, st, st.psi, st.psi_t, st.psi_r);
    if !(arg > 0.0) {
        return Err(HodographError::Vacuum { r: st.r, argument: arg });
    }
    let csq = (gas.gamma - 1.0) * arg;
    let mut set = coeffs_with_csq(st, b0, n, csq)?;
    set.bernoulli_arg = arg;
    set.density = gas.enthalpy_inverse_unchecked(arg);
    Ok(set)
}

/// Coefficients with `c²` supplied directly; `bernoulli_arg` and `density`
/// are left as NaN. Used where the sound speed is a free parameter.
pub fn coeffs_with_csq(st: &HodographState, b0: f64, n: usize, csq: f64) -> Result<CoeffSet, HodographError> {
    let a = a_coeffs(st)?;
    let ACoeffs { a0, a1, a2, a3, a4 } = a;
    let r1 = st.r - 1.0;
    let r2 = st.r - 2.0;
    let (psi, pt, pr) = (st.psi, st.psi_t, st.psi_r);
    let dta0 = st.b_t + r1 * pt;
    let za0: [f64; 3] = std::array::from_fn(|i| st.zb[i] + r1 * st.zpsi[i]);
    // q = ∂_sφ − s, the relative radial velocity in similarity variables.
    let q = b0 * a1 * a2 - a0;
    let a0sq = a0 * a0;
    let sum_a4sq: f64 = a4.iter().map(|x| x * x).sum();
    let sum_zb_a4: f64 = (0..3).map(|i| st.zb[i] * a4[i]).sum();
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    // c²δᵢⱼ − (b₀a₁/a₀)² a₄ⁱa₄ʲ, the angular block of the symbol.
    let angular = |i: usize, j: usize| csq * delta(i, j) - (b0 * a1 / a0).powi(2) * a4[i] * a4[j];

    let a1c = [psi, 0.0, 0.0];

    let a2c = [
        r2 * st.b_t - a1 * (r1 * a3 + psi * dta0),
        2.0 * q * (1.0 - r1 * a1 * pr) + 2.0 * b0 * a1 / a0sq * (r1 * a1 * sum_a4sq - r2 * sum_zb_a4),
        0.0,
    ];

    let a3c = [
        [0.0; 3],
        std::array::from_fn(|i| -2.0 * b0 / a0sq * a1 * a4[i] * psi),
        [0.0; 3],
    ];

    let mut a42 = a1 * (q * q - csq) * (1.0 - r1 * a1 * pr);
    for i in 0..3 {
        a42 += 2.0 * b0 * a1 / a0sq * (-q) * a4[i] * (r2 * a1 * st.zb[i] - r1 * a1 * a1 * a4[i]);
        for j in 0..3 {
            a42 += angular(i, j) / a0sq * (r2 * st.zb[j] - r1 * a1 * a4[j]) * a1 * za0[i];
        }
    }
    let a4c = [
        dta0 * a1 * (r1 * a1 * a3 - r2 * st.b_t),
        2.0 * dta0 * a1 * q * (r1 * a1 * pr - 1.0)
            + 2.0 * b0 / a0sq * dta0 * a1 * a1 * (r2 * sum_zb_a4 - r1 * a1 * sum_a4sq),
        a42,
    ];

    let a5c = [
        [0.0; 3],
        std::array::from_fn(|i| 2.0 * b0 / a0sq * dta0 * a1 * a1 * psi * a4[i]),
        std::array::from_fn(|i| {
            let mut v = 2.0 * b0 * a1 * a1 / a0sq * (-q) * a4[i] * psi;
            for j in 0..3 {
                v += angular(i, j) / a0sq * (a1 * za0[j] * psi + r1 * a1 * a4[j] - r2 * st.zb[j]);
            }
            v
        }),
    ];

    let a6c = [
        [[0.0; 3]; 3],
        [[0.0; 3]; 3],
        std::array::from_fn(|i| std::array::from_fn(|j| -angular(i, j) / a0sq * psi)),
    ];

    let a70 = pt * pt + psi * st.b_tt + pt * st.b_t + r2 * st.b_tt * pr
        - a1 * (pt * a3 + dta0 * (pt * pr + 2.0 * pr * st.b_t))
        + 2.0 * dta0 * a1 * a1 * a3 * pr;
    let mut a71 = 2.0 * a1 * (b0 / a0sq * a1 * sum_a4sq - pr * q) * (pt - 2.0 * a1 * dta0 * pr) + 2.0 * a3;
    for i in 0..3 {
        a71 -= 2.0 * b0 / a0sq
            * a1
            * a4[i]
            * (pt * st.zpsi[i] + pt * st.zb[i] + psi * st.zb_t[i] + r2 * st.zb_t[i] * pr
                - a1 * dta0 * (pr * st.zpsi[i] + 2.0 * pr * st.zb[i]));
    }
    let n1 = n as f64 - 1.0;
    let mut a72 = 2.0 * (a1 * pr).powi(2) * (csq - q * q)
        + n1 * a2 / a0 * csq
        + b0 * a1 / (a0sq * a0) * (b0 * a1 * a2 - 2.0 * a0) * sum_a4sq;
    for i in 0..3 {
        a72 += 2.0 * b0 * a1 * a1 / a0sq * (-q) * pr * a4[i] * (st.zpsi[i] + 2.0 * st.zb[i] - 2.0 * a1 * a4[i]);
        for j in 0..3 {
            a72 += -angular(i, j) / a0sq
                * (st.zpsi[i] * st.zpsi[j] + st.zpsi[i] * st.zb[j] + psi * st.zzb[i][j] + r2 * st.zzb[i][j] * pr
                    - a1 * za0[i] * pr * (st.zpsi[j] + 2.0 * st.zb[j])
                    - a1 * a4[j] * (st.zpsi[i] - 2.0 * a1 * za0[i] * pr));
        }
    }

    Ok(CoeffSet {
        a,
        bernoulli_arg: f64::NAN,
        csq,
        density: f64::NAN,
        a1: a1c,
        a2: a2c,
        a3: a3c,
        a4: a4c,
        a5: a5c,
        a6: a6c,
        a7: [a70, a71, a72],
    })
}
