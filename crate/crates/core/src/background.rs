//! Self-similar background flow behind a conic shock driven by a piston
//! `r = b₀t`.
//!
//! The profile is a function of `s = r/t`. Because the shock layer is
//! extremely thin at large `b₀` (`s₀ − b₀` shrinks like `b₀^{-2/(γ−1)}`),
//! everything is stored in offset variables:
//!
//! * `ξ = s − b₀`, the distance from the piston;
//! * `w = s − û`, the flow speed relative to the similarity frame.
//!
//! Both are small and carry full relative precision, while `s` and `û`
//! themselves would lose most significant digits to cancellation.
//! The ODE in these variables reads
//!
//! ```text
//! ρ' = (n−1) w ρ û / (s D),   w' = 1 − (n−1) c² û / (s D),   D = w² − c² < 0,
//! ```
//!
//! and the potential defect `J(ξ) = ∫_ξ^{ξ₀} (ξ' − w) dξ'` is integrated
//! alongside, so that `φ̂ = −b₀(ξ₀ − ξ) − J` and `ψ̂ = ξ₀ + J/b₀`.

use crate::dual::{Dual, Real};
use crate::gas::{GasError, GasParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackgroundError {
    #[error(transparent)]
    Gas(#[from] GasError),
    #[error("no admissible shock: speed {s0} does not exceed the ambient sound speed {c0}")]
    Subsonic { s0: f64, c0: f64 },
    #[error("shock root bracket failed for s0 = {s0}")]
    JumpBracket { s0: f64 },
    #[error("shooting bracket failure for b0 = {b0}: {reason}")]
    Bracket { b0: f64, reason: String },
    #[error("denominator (s-u)^2 - c^2 = {denominator:e} is non-negative at s = {s}")]
    Denominator { s: f64, denominator: f64 },
    #[error("invalid input: {0}")]
    Input(String),
}

/// State just behind the shock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockJump {
    pub s0: f64,
    pub rho_plus: f64,
    pub u_plus: f64,
    /// `s₀ − u₊ = s₀ρ₀/ρ₊`, computed without cancellation.
    pub w_plus: f64,
    pub alpha0: f64,
}

impl ShockJump {
    /// Bernoulli residual `−s₀u₊ + u₊²/2 + h(ρ₊) − B₀`, relative to `h(ρ₊)`.
    pub fn bernoulli_residual(&self, gas: &GasParams) -> f64 {
        let h = gas.enthalpy_unchecked(self.rho_plus);
        (-self.s0 * self.u_plus + 0.5 * self.u_plus * self.u_plus + h - gas.bernoulli) / h
    }

    /// Lax inequalities `u₊−c₊ < s₀ < u₊+c₊` and `c₀ < s₀`.
    pub fn lax_holds(&self, gas: &GasParams) -> bool {
        let cp = gas.csq_unchecked(self.rho_plus).sqrt();
        let c0 = gas.csq_unchecked(gas.rho0).sqrt();
        // s₀ − (u₊ − c₊) = w₊ + c₊ and (u₊ + c₊) − s₀ = c₊ − w₊.
        self.w_plus + cp > 0.0 && cp - self.w_plus > 0.0 && self.s0 > c0
    }
}

/// `G(x) · x` where `G(x) = F(x)/(x−ρ₀)` and `F` is the Bernoulli residual
/// at the shock as a function of the post-shock density `x = ρ₀(1+ζ)`.
/// `G(ρ₀) = (c₀² − s₀²)/ρ₀ < 0`, so the non-trivial root is the unique
/// sign change on `(ρ₀, ∞)`.
fn jump_root_function(gas: &GasParams, s0: f64, zeta: f64) -> f64 {
    let g1 = gas.gamma - 1.0;
    let ratio = if zeta.abs() < 1e-300 {
        g1
    } else {
        (g1 * zeta.ln_1p()).exp_m1() / zeta
    };
    let x = gas.rho0 * (1.0 + zeta);
    let enthalpy_part = gas.a * gas.gamma / g1 * gas.rho0.powf(gas.gamma - 2.0) * ratio;
    x * enthalpy_part - s0 * s0 + 0.5 * s0 * s0 * zeta / (1.0 + zeta)
}

/// Post-shock state for a shock moving with speed `s0` into gas at rest.
pub fn shock_jump_from_speed(s0: f64, gas: &GasParams) -> Result<ShockJump, BackgroundError> {
    let c0 = gas.csq_unchecked(gas.rho0).sqrt();
    if !(s0 > c0) || !s0.is_finite() {
        return Err(BackgroundError::Subsonic { s0, c0 });
    }
    let mut hi = 1.0;
    let mut expansions = 0;
    while jump_root_function(gas, s0, hi) <= 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 2000 || !hi.is_finite() {
            return Err(BackgroundError::JumpBracket { s0 });
        }
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if jump_root_function(gas, s0, mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= 1e-16 * (1.0 + hi) {
            break;
        }
    }
    let zeta = 0.5 * (lo + hi);
    let rho_plus = gas.rho0 * (1.0 + zeta);
    let w_plus = s0 * gas.rho0 / rho_plus;
    Ok(ShockJump {
        s0,
        rho_plus,
        u_plus: s0 * zeta / (1.0 + zeta),
        w_plus,
        alpha0: 1.0 + zeta,
    })
}

/// ODE right-hand side in offset variables: returns `(ρ', w', J')`
/// and the denominator `D`.
#[inline]
pub fn rhs<T: Real>(gas: &GasParams, n: usize, b0: f64, xi: T, rho: T, w: T) -> (T, T, T, T) {
    let s = xi + b0;
    let u = s - w;
    let csq = rho.powf(gas.gamma - 1.0) * (gas.a * gas.gamma);
    let d = w * w - csq;
    let k = (s * d).powf(-1.0) * (n as f64 - 1.0);
    let drho = k * w * rho * u;
    let du = k * csq * u;
    (drho, -du + 1.0, w - xi, d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OdeState {
    xi: f64,
    rho: f64,
    w: f64,
    j: f64,
}

struct Ode<'a> {
    gas: &'a GasParams,
    n: usize,
    b0: f64,
}

impl Ode<'_> {
    fn deriv(&self, st: &OdeState) -> Result<(f64, f64, f64), BackgroundError> {
        let (dr, dw, dj, d) = rhs(self.gas, self.n, self.b0, st.xi, st.rho, st.w);
        if !(d < 0.0) || !(st.rho > 0.0) {
            return Err(BackgroundError::Denominator { s: self.b0 + st.xi, denominator: d });
        }
        Ok((dr, dw, dj))
    }

    fn rk4(&self, st: &OdeState, h: f64) -> Result<OdeState, BackgroundError> {
        let at = |base: &OdeState, k: (f64, f64, f64), f: f64| OdeState {
            xi: st.xi + f * h,
            rho: base.rho + f * h * k.0,
            w: base.w + f * h * k.1,
            j: base.j + f * h * k.2,
        };
        let k1 = self.deriv(st)?;
        let k2 = self.deriv(&at(st, k1, 0.5))?;
        let k3 = self.deriv(&at(st, k2, 0.5))?;
        let k4 = self.deriv(&at(st, k3, 1.0))?;
        let c = h / 6.0;
        Ok(OdeState {
            xi: st.xi + h,
            rho: st.rho + c * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            w: st.w + c * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            j: st.j + c * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
        })
    }

    /// Integrates `steps` steps of size `h`, returning every node.
    fn march(&self, start: OdeState, h: f64, steps: usize) -> Result<Vec<OdeState>, BackgroundError> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(start);
        let mut st = start;
        for k in 1..=steps {
            st = self.rk4(&st, h)?;
            // Pin the abscissa to the grid to avoid drift from repeated addition.
            st.xi = start.xi + k as f64 * h;
            out.push(st);
        }
        Ok(out)
    }

    /// Integrates from `start` to the abscissa `target` with steps no longer than `hmax`.
    fn continue_to(&self, start: OdeState, target: f64, hmax: f64) -> Result<OdeState, BackgroundError> {
        let span = target - start.xi;
        if span == 0.0 {
            return Ok(start);
        }
        let steps = ((span.abs() / hmax).ceil() as usize).max(1);
        let h = span / steps as f64;
        let mut st = start;
        for k in 1..=steps {
            st = self.rk4(&st, h)?;
            st.xi = start.xi + k as f64 * h;
        }
        st.xi = target;
        Ok(st)
    }
}

/// Root of the cubic Hermite interpolant of `w` on one step.
fn hermite_root(xa: f64, wa: f64, da: f64, xb: f64, wb: f64, db: f64) -> f64 {
    let h = xb - xa;
    let p = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * wa
            + (t3 - 2.0 * t2 + t) * h * da
            + (-2.0 * t3 + 3.0 * t2) * wb
            + (t3 - t2) * h * db
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    let sign_lo = wa > 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if (p(mid) > 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    xa + 0.5 * (lo + hi) * h
}

/// Piston mismatch for a trial shock offset `xi0 = s₀ − b₀`: the abscissa
/// `ξ` at which the backward integration from the shock reaches `w = 0`.
/// Zero means the piston condition `û(b₀) = b₀` holds.
fn piston_mismatch(
    gas: &GasParams,
    n: usize,
    b0: f64,
    xi0: f64,
    grid_size: usize,
) -> Result<f64, BackgroundError> {
    let jump = shock_jump_from_speed(b0 + xi0, gas)?;
    let ode = Ode { gas, n, b0 };
    let h = -xi0 / (grid_size - 1) as f64;
    let mut st = OdeState { xi: xi0, rho: jump.rho_plus, w: jump.w_plus, j: 0.0 };
    let mut d = ode.deriv(&st)?;
    let max_steps = 4 * (grid_size - 1);
    for k in 1..=max_steps {
        let next = ode.rk4(&st, h)?;
        let next = OdeState { xi: xi0 + k as f64 * h, ..next };
        let dn = ode.deriv(&next)?;
        if next.w <= 0.0 {
            return Ok(hermite_root(st.xi, st.w, d.1, next.xi, next.w, dn.1));
        }
        st = next;
        d = dn;
    }
    // Event lies far below the piston: extrapolate linearly (sign is what matters).
    Ok(st.xi - st.w / d.1)
}

/// Sampled background profile on `s ∈ [b₀−τ₀, s₀+τ₀]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelfSimilarSolution {
    pub gas: GasParams,
    pub n: usize,
    pub b0: f64,
    pub s0: f64,
    /// `s₀ − b₀` as solved (the primary unknown, not a difference).
    pub xi0: f64,
    pub tau0: f64,
    pub jump: ShockJump,
    /// Interior step `ξ₀/(N−1)`.
    pub step: f64,
    /// Index of the piston node `ξ = 0` and the shock node `ξ = ξ₀`.
    pub piston_index: usize,
    pub shock_index: usize,
    pub xi: Vec<f64>,
    pub s: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub phi: Vec<f64>,
    /// `J(ξ)`; `φ̂ = −b₀(ξ₀−ξ) − J` and `ψ̂ = ξ₀ + J/b₀`.
    pub phi_defect: Vec<f64>,
    /// Max |mismatch| over the bracket endpoints after each bisection step.
    pub shooting_history: Vec<f64>,
    /// Number of halvings applied to `τ₀` to keep the denominator negative.
    pub tau0_halvings: u32,
}

/// Background quantities at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundPoint {
    pub xi: f64,
    pub s: f64,
    pub rho: f64,
    pub w: f64,
    pub u: f64,
    pub phi: f64,
    pub defect: f64,
}

impl SelfSimilarSolution {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Index range of the samples inside `[b₀, s₀]`.
    pub fn interior(&self) -> std::ops::RangeInclusive<usize> {
        self.piston_index..=self.shock_index
    }

    pub fn csq(&self, i: usize) -> f64 {
        self.gas.csq_unchecked(self.rho[i])
    }

    /// `(s−û)² − c²` at node `i`.
    pub fn denominator(&self, i: usize) -> f64 {
        self.w[i] * self.w[i] - self.csq(i)
    }

    /// `(ρ̂', û')` at node `i` from the ODE.
    pub fn derivatives(&self, i: usize) -> (f64, f64) {
        let (dr, dw, _, _) = rhs(&self.gas, self.n, self.b0, self.xi[i], self.rho[i], self.w[i]);
        (dr, 1.0 - dw)
    }

    /// `(ρ̂'', û'')` at node `i`, by differentiating the ODE along the solution.
    pub fn second_derivatives(&self, i: usize) -> (f64, f64) {
        second_derivatives_at(&self.gas, self.n, self.b0, self.xi[i], self.rho[i], self.w[i])
    }

    fn ode(&self) -> Ode<'_> {
        Ode { gas: &self.gas, n: self.n, b0: self.b0 }
    }

    fn node(&self, i: usize) -> OdeState {
        OdeState { xi: self.xi[i], rho: self.rho[i], w: self.w[i], j: self.phi_defect[i] }
    }

    fn point_from(&self, st: OdeState) -> BackgroundPoint {
        BackgroundPoint {
            xi: st.xi,
            s: self.b0 + st.xi,
            rho: st.rho,
            w: st.w,
            u: self.b0 + (st.xi - st.w),
            phi: -self.b0 * (self.xi0 - st.xi) - st.j,
            defect: st.j,
        }
    }

    /// Evaluates the background at offset `xi`: cubic Hermite interpolation
    /// inside the sampled range, continuation by the ODE outside it.
    pub fn eval_xi(&self, xi: f64) -> Result<BackgroundPoint, BackgroundError> {
        let last = self.len() - 1;
        if xi < self.xi[0] || xi > self.xi[last] {
            let from = if xi < self.xi[0] { 0 } else { last };
            let hmax = 1e-3 * self.b0.max(1.0);
            let st = self.ode().continue_to(self.node(from), xi, hmax)?;
            return Ok(self.point_from(st));
        }
        let k = match self.xi.partition_point(|&x| x <= xi) {
            0 => 0,
            p => (p - 1).min(last - 1),
        };
        let (a, b) = (self.node(k), self.node(k + 1));
        let h = b.xi - a.xi;
        // Extension steps below the spacing of doubles near ξ₀ collapse.
        if !(h > 0.0) {
            return Ok(self.point_from(OdeState { xi, ..a }));
        }
        let ode = self.ode();
        let (da, db) = (ode.deriv(&a)?, ode.deriv(&b)?);
        let t = (xi - a.xi) / h;
        let herm = |ya: f64, dya: f64, yb: f64, dyb: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            (2.0 * t3 - 3.0 * t2 + 1.0) * ya
                + (t3 - 2.0 * t2 + t) * h * dya
                + (-2.0 * t3 + 3.0 * t2) * yb
                + (t3 - t2) * h * dyb
        };
        let st = OdeState {
            xi,
            rho: herm(a.rho, da.0, b.rho, db.0),
            w: herm(a.w, da.1, b.w, db.1),
            j: herm(a.j, da.2, b.j, db.2),
        };
        Ok(self.point_from(st))
    }

    /// Evaluates at similarity coordinate `s`.
    pub fn eval_s(&self, s: f64) -> Result<BackgroundPoint, BackgroundError> {
        self.eval_xi(s - self.b0)
    }

    /// Deviation between the stored samples and a re-integration with
    /// four sub-steps per step from the same starting data, split into
    /// `(interior, extension)`. For a 4th-order integrator this is the
    /// global truncation error of the stored profile.
    pub fn ode_residual(&self) -> Result<(f64, f64), BackgroundError> {
        let ode = self.ode();
        let wscale = self.jump.w_plus;
        let mut interior = 0.0f64;
        let mut extension = 0.0f64;
        let compare = |from: usize, to: usize, acc: &mut f64| -> Result<(), BackgroundError> {
            let dir: isize = if to >= from { 1 } else { -1 };
            let mut st = self.node(from);
            let mut i = from as isize;
            while i != to as isize {
                let next = (i + dir) as usize;
                let h = (self.xi[next] - self.xi[i as usize]) / 4.0;
                for _ in 0..4 {
                    st = ode.rk4(&st, h)?;
                }
                st.xi = self.xi[next];
                let dr = ((st.rho - self.rho[next]) / self.rho[next]).abs();
                let dw = ((st.w - self.w[next]) / wscale).abs();
                *acc = acc.max(dr).max(dw);
                i += dir;
            }
            Ok(())
        };
        compare(self.shock_index, self.piston_index, &mut interior)?;
        compare(self.piston_index, 0, &mut extension)?;
        compare(self.shock_index, self.len() - 1, &mut extension)?;
        Ok((interior, extension))
    }

    /// Piston mismatch `|û(b₀) − b₀| = |w(0)|`.
    pub fn piston_mismatch(&self) -> f64 {
        self.w[self.piston_index].abs()
    }

    /// Serializable summary of the solve.
    pub fn summary(&self) -> BackgroundSummary {
        BackgroundSummary {
            n: self.n,
            gamma: self.gas.gamma,
            a: self.gas.a,
            rho0: self.gas.rho0,
            b0: self.b0,
            s0: self.s0,
            s0_minus_b0: self.xi0,
            rho_plus: self.jump.rho_plus,
            u_plus: self.jump.u_plus,
            tau0: self.tau0,
            grid_points: self.len(),
            piston_mismatch: self.piston_mismatch(),
        }
    }

    /// CSV with columns `s, rho, u, phi` in shortest round-trip notation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,rho,u,phi\n");
        for i in 0..self.len() {
            out.push_str(&format!("{},{},{},{}\n", self.s[i], self.rho[i], self.u[i], self.phi[i]));
        }
        out
    }
}

/// `(ρ'', û'')` from a tangent evaluation of the ODE.
pub fn second_derivatives_at(gas: &GasParams, n: usize, b0: f64, xi: f64, rho: f64, w: f64) -> (f64, f64) {
    let (dr, dw, _, _) = rhs(gas, n, b0, xi, rho, w);
    let (ddr, ddw, _, _) = rhs(
        gas,
        n,
        b0,
        Dual::new(xi, 1.0),
        Dual::new(rho, dr),
        Dual::new(w, dw),
    );
    (ddr.eps, -ddw.eps)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BackgroundSummary {
    pub n: usize,
    pub gamma: f64,
    pub a: f64,
    pub rho0: f64,
    pub b0: f64,
    pub s0: f64,
    pub s0_minus_b0: f64,
    pub rho_plus: f64,
    pub u_plus: f64,
    pub tau0: f64,
    pub grid_points: usize,
    pub piston_mismatch: f64,
}

/// Default number of samples on `[b₀, s₀]`.
pub const DEFAULT_GRID: usize = 2048;

/// Solves the piston problem on `[b₀, s₀]` by shooting on `ξ₀ = s₀ − b₀`.
///
/// The bisection runs on `log ξ₀` over `(ξ_lo, 2b₀]`, i.e. `s₀ ≤ 3b₀`.
/// `ξ_lo` starts at `1e-8·b₀` and is shrunk by `1e-4` while the mismatch
/// there is still positive, since the layer can be thinner than `1e-8·b₀`.
pub fn solve_background(
    b0: f64,
    gas: &GasParams,
    n: usize,
    grid_size: usize,
) -> Result<SelfSimilarSolution, BackgroundError> {
    if n != 2 && n != 3 {
        return Err(BackgroundError::Input(format!("dimension n = {n} must be 2 or 3")));
    }
    if grid_size < 3 {
        return Err(BackgroundError::Input(format!("grid_size = {grid_size} must be at least 3")));
    }
    if !(b0 > 0.0 && b0.is_finite()) {
        return Err(BackgroundError::Input(format!("b0 = {b0} must be positive")));
    }
    let c0 = gas.csq_unchecked(gas.rho0).sqrt();
    let bracket_err = |reason: String| BackgroundError::Bracket { b0, reason };

    let mut hi = 2.0 * b0;
    if b0 + hi <= c0 {
        return Err(bracket_err(format!(
            "every s0 in (b0, 3 b0] is subsonic (ambient sound speed {c0})"
        )));
    }
    let m_hi = piston_mismatch(gas, n, b0, hi, grid_size)
        .map_err(|e| bracket_err(format!("upper end s0 = 3 b0: {e}")))?;
    if !(m_hi > 0.0) {
        return Err(bracket_err(format!("no sign change: mismatch at s0 = 3 b0 is {m_hi:e}")));
    }
    let sonic_floor = if c0 > b0 { (c0 - b0) * (1.0 + 1e-12) + 1e-15 * c0 } else { 0.0 };
    let mut lo = (1e-8 * b0).max(sonic_floor);
    let mut m_lo = piston_mismatch(gas, n, b0, lo, grid_size)?;
    let mut shrinks = 0;
    while m_lo >= 0.0 {
        let next = (lo * 1e-4).max(sonic_floor);
        if shrinks >= 12 || next >= lo {
            return Err(bracket_err(format!("no sign change down to s0 - b0 = {lo:e}")));
        }
        lo = next;
        m_lo = piston_mismatch(gas, n, b0, lo, grid_size)?;
        shrinks += 1;
    }

    let mut history = vec![m_lo.abs().max(m_hi.abs())];
    let (mut m_l, mut m_h) = (m_lo, m_hi);
    for _ in 0..400 {
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
        let mid = (lo.ln() + 0.5 * (hi.ln() - lo.ln())).exp().clamp(lo, hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = piston_mismatch(gas, n, b0, mid, grid_size)?;
        if m > 0.0 {
            hi = mid;
            m_h = m;
        } else {
            lo = mid;
            m_l = m;
        }
        history.push(m_l.abs().max(m_h.abs()));
    }
    let xi0 = if m_l.abs() < m_h.abs() { lo } else { hi };

    let jump = shock_jump_from_speed(b0 + xi0, gas)?;
    let ode = Ode { gas, n, b0 };
    let h = xi0 / (grid_size - 1) as f64;
    let start = OdeState { xi: xi0, rho: jump.rho_plus, w: jump.w_plus, j: 0.0 };
    let mut nodes = ode.march(start, -h, grid_size - 1)?;
    nodes.reverse();
    nodes[0].xi = 0.0;

    let mut sol = SelfSimilarSolution {
        gas: *gas,
        n,
        b0,
        s0: b0 + xi0,
        xi0,
        tau0: 0.0,
        jump,
        step: h,
        piston_index: 0,
        shock_index: grid_size - 1,
        xi: Vec::new(),
        s: Vec::new(),
        rho: Vec::new(),
        u: Vec::new(),
        w: Vec::new(),
        phi: Vec::new(),
        phi_defect: Vec::new(),
        shooting_history: history,
        tau0_halvings: 0,
    };
    sol.fill_from(&nodes);
    Ok(sol)
}

impl SelfSimilarSolution {
    fn fill_from(&mut self, nodes: &[OdeState]) {
        self.xi = nodes.iter().map(|p| p.xi).collect();
        self.rho = nodes.iter().map(|p| p.rho).collect();
        self.w = nodes.iter().map(|p| p.w).collect();
        self.phi_defect = nodes.iter().map(|p| p.j).collect();
        self.s = self.xi.iter().map(|&x| self.b0 + x).collect();
        self.u = nodes.iter().map(|p| self.b0 + (p.xi - p.w)).collect();
        self.phi = nodes.iter().map(|p| -self.b0 * (self.xi0 - p.xi) - p.j).collect();
    }
}

/// Extension margin bound `b₀^{−4/(γ−1)}(s₀ − b₀)`.
pub fn tau0_bound(sol: &SelfSimilarSolution) -> f64 {
    sol.b0.powf(-4.0 / (sol.gas.gamma - 1.0)) * sol.xi0
}

/// Continues the interior profile by the same ODE to `[b₀−τ₀, s₀+τ₀]`.
/// If the denominator would lose its sign, `τ₀` is halved and the number
/// of halvings is recorded.
pub fn extend_background(sol: &SelfSimilarSolution) -> Result<SelfSimilarSolution, BackgroundError> {
    let interior: Vec<OdeState> = sol.interior().map(|i| sol.node(i)).collect();
    let ode = sol.ode();
    let n_int = interior.len();
    let mut tau0 = tau0_bound(sol);
    let mut halvings = 0;
    loop {
        let n_ext = ((tau0 / sol.step).ceil() as usize).clamp(1, n_int - 1);
        let h_ext = tau0 / n_ext as f64;
        let lower = ode.march(interior[0], -h_ext, n_ext);
        let upper = ode.march(interior[n_int - 1], h_ext, n_ext);
        match (lower, upper) {
            (Ok(mut lower), Ok(upper)) => {
                lower.reverse();
                let mut nodes = lower[..n_ext].to_vec();
                nodes.extend_from_slice(&interior);
                nodes.extend_from_slice(&upper[1..]);
                let mut out = sol.clone();
                out.tau0 = tau0;
                out.tau0_halvings = halvings;
                out.piston_index = n_ext;
                out.shock_index = n_ext + n_int - 1;
                out.fill_from(&nodes);
                return Ok(out);
            }
            (Err(e), _) | (_, Err(e)) => {
                halvings += 1;
                tau0 *= 0.5;
                if halvings > 60 {
                    return Err(e);
                }
            }
        }
    }
}

/// Solve and extend in one call.
pub fn solve_extended(
    b0: f64,
    gas: &GasParams,
    n: usize,
    grid_size: usize,
) -> Result<SelfSimilarSolution, BackgroundError> {
    extend_background(&solve_background(b0, gas, n, grid_size)?)
}
