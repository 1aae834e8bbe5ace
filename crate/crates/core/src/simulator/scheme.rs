//! Box-scheme semi-discretization on the mapped grid, advanced by a
//! two-stage L-stable SDIRK method with chord Newton iterations.
//!
//! Unknown vector `Y = [W₀, V₀, …, W_N, V_N, χ, ν]` with `χ = ζ/t` and
//! `ν = χ_τ`. Row 0 is the piston condition, rows `2i+1, 2i+2` are the
//! two balance laws averaged over cell `i`, row `2N+1` is the shock
//! condition; the two border rows are `χ_τ = ν` and the shock speed law.
//! The banded part has bandwidth two on either side.

use super::banded::Bordered;
use super::modified::ModifiedBackground;
use super::{PistonProfile, Record, SimConfig, SimError, SimState};
use crate::background::SelfSimilarSolution;
use crate::gas::GasParams;

/// SDIRK diagonal `1 − 1/√2`.
const GAMMA_S: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
/// Largest step in `τ = ln t`.
pub const DTAU_MAX: f64 = 0.02;
const NEWTON_TOL: f64 = 1e-13;
/// Corrections below this are accepted once Newton stalls at round-off.
const NEWTON_FLOOR: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 12;

#[derive(Clone)]
pub struct Simulator<'a> {
    sol: &'a SelfSimilarSolution,
    gas: GasParams,
    n: usize,
    piston: PistonProfile,
    cfl: f64,
    /// Mapped nodes `y_i = i·Δy`.
    y: Vec<f64>,
    dy: f64,
    tau: f64,
    state: Vec<f64>,
    /// `Φ/t` at the nodes.
    phi: Vec<f64>,
    jac: Option<(Bordered, f64)>,
    modified: ModifiedBackground<'a>,
    last_dtau: f64,
}

/// Shock data carried from one record to the next.
#[derive(Debug, Clone, Copy)]
pub struct ShockSnapshot {
    pub t: f64,
    pub zeta: f64,
    pub speed: f64,
}

impl<'a> Simulator<'a> {
    /// State at `t = 1`: the background layer translated so that its
    /// piston end sits at `σ(1)`, with the velocity shifted by `σ̇(1) − b₀`
    /// and `V` adjusted to keep the sound speed of the background.
    pub fn init_from_background(sol: &'a SelfSimilarSolution, cfg: &SimConfig) -> Result<Self, SimError> {
        let nodes = cfg.grid_points;
        let dy = 1.0 / (nodes - 1) as f64;
        let y: Vec<f64> = (0..nodes).map(|i| if i + 1 == nodes { 1.0 } else { i as f64 * dy }).collect();
        let piston = cfg.piston();
        let shift = piston.sigma_dot(1.0) - sol.b0;
        let mut state = vec![0.0; 2 * nodes + 2];
        let mut phi = vec![0.0; nodes];
        for (i, &yi) in y.iter().enumerate() {
            let p = sol.eval_xi(yi * sol.xi0)?;
            let v_hat = p.phi - p.s * p.u;
            let w = p.u + shift;
            state[2 * i] = w;
            state[2 * i + 1] = v_hat - 0.5 * (w * w - p.u * p.u);
            phi[i] = p.phi;
        }
        let chi = piston.b(1.0) + sol.xi0;
        let nb = 2 * nodes;
        state[nb] = chi;
        let mut sim = Simulator {
            sol,
            gas: sol.gas,
            n: sol.n,
            piston,
            cfl: cfg.cfl,
            y,
            dy,
            tau: 0.0,
            state,
            phi,
            jac: None,
            modified: ModifiedBackground::new(sol, piston),
            last_dtau: 0.0,
        };
        let speed = sim.shock_speed(&sim.state)?;
        sim.state[nb + 1] = speed - chi;
        Ok(sim)
    }

    pub fn t(&self) -> f64 {
        self.tau.exp()
    }

    pub fn nodes(&self) -> usize {
        self.y.len()
    }

    fn nb(&self) -> usize {
        2 * self.nodes()
    }

    pub fn chi(&self) -> f64 {
        self.state[self.nb()]
    }

    pub fn w(&self, i: usize) -> f64 {
        self.state[2 * i]
    }

    pub fn v(&self, i: usize) -> f64 {
        self.state[2 * i + 1]
    }

    fn enthalpy(&self, w: f64, v: f64) -> f64 {
        self.gas.bernoulli - v - 0.5 * w * w
    }

    /// `ζ̇ = HW/(H − ρ₀)` from the shock node of `y`.
    fn shock_speed(&self, y: &[f64]) -> Result<f64, SimError> {
        let k = self.nodes() - 1;
        let (w, v) = (y[2 * k], y[2 * k + 1]);
        let hval = self.enthalpy(w, v);
        if !(hval > 0.0) {
            return Err(SimError::Vacuum { t: self.t(), node: k, enthalpy: hval });
        }
        let rho = self.gas.enthalpy_inverse_unchecked(hval);
        Ok(rho * w / (rho - self.gas.rho0))
    }

    fn scale(&self, j: usize) -> f64 {
        let b0 = self.sol.b0;
        if j >= self.nb() || j.is_multiple_of(2) {
            b0
        } else {
            b0 * b0
        }
    }

    fn is_differential(&self, row: usize) -> bool {
        let nb = self.nb();
        (row >= 1 && row < nb - 1) || row == nb
    }

    /// Right-hand side on differential rows, constraint residual on
    /// algebraic rows.
    fn eval(&self, tau: f64, y: &[f64], f: &mut [f64]) -> Result<(), SimError> {
        let t = tau.exp();
        let nodes = self.nodes();
        let nb = self.nb();
        let (chi, nu) = (y[nb], y[nb + 1]);
        let beta = self.piston.b(t);
        let beta_p = self.piston.t_b_prime(t);
        let len = chi - beta;
        if !(len > 0.0) {
            return Err(SimError::Collapse { t });
        }
        let gm1 = self.gas.gamma - 1.0;
        let nm1 = (self.n - 1) as f64;
        f[0] = y[0] - (beta + beta_p);
        for i in 0..nodes - 1 {
            let yb = 0.5 * (self.y[i] + self.y[i + 1]);
            let sb = beta + yb * len;
            let gb = beta_p + yb * (nu - beta_p);
            let wb = 0.5 * (y[2 * i] + y[2 * i + 2]);
            let vb = 0.5 * (y[2 * i + 1] + y[2 * i + 3]);
            let hval = self.enthalpy(wb, vb);
            if !(hval > 0.0) {
                return Err(SimError::Vacuum { t, node: i, enthalpy: hval });
            }
            let csq = gm1 * hval;
            let dx = (self.y[i + 1] - self.y[i]) * len;
            let dw = (y[2 * i + 2] - y[2 * i]) / dx;
            let dv = (y[2 * i + 3] - y[2 * i + 1]) / dx;
            f[2 * i + 1] = (sb + gb) * dw + dv;
            f[2 * i + 2] = (sb + gb - 2.0 * wb) * dv - (wb * wb - csq) * dw + nm1 * csq * wb / sb;
        }
        let k = nodes - 1;
        let (w, v) = (y[2 * k], y[2 * k + 1]);
        let hval = self.enthalpy(w, v);
        if !(hval > 0.0) {
            return Err(SimError::Vacuum { t, node: k, enthalpy: hval });
        }
        let rho = self.gas.enthalpy_inverse_unchecked(hval);
        let rho0 = self.gas.rho0;
        let b0 = self.sol.b0;
        f[nb - 1] = (v * (rho - rho0) + rho * w * w) / (rho * b0 * b0);
        f[nb] = nu;
        f[nb + 1] = nu - (rho * w / (rho - rho0) - chi);
        Ok(())
    }

    /// `M(Y − Y_n)` on differential rows.
    fn mass_apply(&self, y: &[f64], yn: &[f64], out: &mut [f64]) {
        let nb = self.nb();
        for i in 0..self.nodes() - 1 {
            out[2 * i + 1] = 0.5 * ((y[2 * i] - yn[2 * i]) + (y[2 * i + 2] - yn[2 * i + 2]));
            out[2 * i + 2] = 0.5 * ((y[2 * i + 1] - yn[2 * i + 1]) + (y[2 * i + 3] - yn[2 * i + 3]));
        }
        out[nb] = y[nb] - yn[nb];
    }

    /// Stage residual `M(Y − Y_n) − explicit − hγF(Y)`; constraints as is.
    fn stage_residual(
        &self,
        tau: f64,
        hg: f64,
        y: &[f64],
        yn: &[f64],
        explicit: &[f64],
        out: &mut [f64],
    ) -> Result<(), SimError> {
        let mut f = vec![0.0; y.len()];
        self.eval(tau, y, &mut f)?;
        self.mass_apply(y, yn, out);
        for row in 0..y.len() {
            if self.is_differential(row) {
                out[row] -= explicit[row] + hg * f[row];
            } else {
                out[row] = f[row];
            }
        }
        Ok(())
    }

    /// Finite-difference Jacobian of the stage residual, with band columns
    /// grouped by index mod 5 so that seven residual evaluations suffice.
    fn build_jacobian(
        &self,
        tau: f64,
        hg: f64,
        y: &[f64],
        yn: &[f64],
        explicit: &[f64],
    ) -> Result<Bordered, SimError> {
        let nb = self.nb();
        let total = nb + 2;
        let mut jac = Bordered::zeros(nb, 2, 2, 2);
        let mut r0 = vec![0.0; total];
        self.stage_residual(tau, hg, y, yn, explicit, &mut r0)?;
        let mut yp = y.to_vec();
        let mut rp = vec![0.0; total];
        let step = |j: usize| 1e-8 * self.scale(j).max(y[j].abs());
        for color in 0..5 {
            yp.copy_from_slice(y);
            for j in (color..nb).step_by(5) {
                yp[j] += step(j);
            }
            self.stage_residual(tau, hg, &yp, yn, explicit, &mut rp)?;
            for j in (color..nb).step_by(5) {
                let h = yp[j] - y[j];
                for row in j.saturating_sub(2)..(j + 3).min(nb) {
                    jac.a.set(row, j, (rp[row] - r0[row]) / h);
                }
                if j + 2 >= nb {
                    for b in 0..2 {
                        jac.c[b][j] = (rp[nb + b] - r0[nb + b]) / h;
                    }
                }
            }
        }
        let len = y[nb] - self.piston.b(tau.exp());
        for b in 0..2 {
            let j = nb + b;
            yp.copy_from_slice(y);
            let h = if b == 0 { 1e-6 * len } else { 1e-8 * self.sol.b0 };
            yp[j] += h;
            let h = yp[j] - y[j];
            self.stage_residual(tau, hg, &yp, yn, explicit, &mut rp)?;
            for row in 0..nb {
                jac.b[b][row] = (rp[row] - r0[row]) / h;
            }
            for c in 0..2 {
                jac.d[c][b] = (rp[nb + c] - r0[nb + c]) / h;
            }
        }
        jac.factor().map_err(|p| SimError::Singular { t: tau.exp(), row: p.row })?;
        Ok(jac)
    }

    /// Solves one stage by chord Newton starting from `guess`.
    fn solve_stage(&mut self, tau: f64, hg: f64, yn: &[f64], explicit: &[f64], guess: &[f64]) -> Result<Vec<f64>, SimError> {
        let total = yn.len();
        let mut y = guess.to_vec();
        let mut r = vec![0.0; total];
        let mut last = f64::INFINITY;
        for attempt in 0..2 {
            let stale = match &self.jac {
                Some((_, h)) => (h / hg - 1.0).abs() > 1e-12,
                None => true,
            };
            if attempt == 1 || stale {
                let jac = self.build_jacobian(tau, hg, &y, yn, explicit)?;
                self.jac = Some((jac, hg));
            }
            let mut prev = f64::INFINITY;
            for _ in 0..NEWTON_MAX_ITER {
                self.stage_residual(tau, hg, &y, yn, explicit, &mut r)?;
                self.jac.as_ref().expect("factored").0.solve(&mut r);
                let mut norm = 0.0f64;
                for j in 0..total {
                    y[j] -= r[j];
                    norm = norm.max(r[j].abs() / self.scale(j));
                }
                if !norm.is_finite() {
                    break;
                }
                last = norm;
                if norm <= NEWTON_TOL {
                    return Ok(y);
                }
                if norm > 0.5 * prev {
                    if norm <= NEWTON_FLOOR && prev <= NEWTON_FLOOR {
                        return Ok(y);
                    }
                    break;
                }
                prev = norm;
            }
        }
        Err(SimError::Newton { t: tau.exp(), correction: last })
    }

    /// `S = V + (s + g)W` at each node, the source of `φ_τ = S − φ`.
    fn potential_source(&self, tau: f64, y: &[f64]) -> Vec<f64> {
        let t = tau.exp();
        let nb = self.nb();
        let beta = self.piston.b(t);
        let beta_p = self.piston.t_b_prime(t);
        let len = y[nb] - beta;
        let nu = y[nb + 1];
        self.y
            .iter()
            .enumerate()
            .map(|(i, &yi)| y[2 * i + 1] + (beta + yi * len + beta_p + yi * (nu - beta_p)) * y[2 * i])
            .collect()
    }

    /// Largest relative speed `|s + g − W|/L` on the mapped grid.
    fn max_relative_speed(&self) -> f64 {
        let t = self.t();
        let nb = self.nb();
        let beta = self.piston.b(t);
        let beta_p = self.piston.t_b_prime(t);
        let len = self.state[nb] - beta;
        let nu = self.state[nb + 1];
        self.y
            .iter()
            .enumerate()
            .map(|(i, &yi)| ((beta + yi * len + beta_p + yi * (nu - beta_p)) - self.state[2 * i]).abs() / len)
            .fold(0.0, f64::max)
    }

    /// Step size from the convective Courant limit, capped at [`DTAU_MAX`].
    pub fn cfl_step(&self) -> f64 {
        let speed = self.max_relative_speed();
        if speed > 0.0 {
            (self.cfl * self.dy / speed).min(DTAU_MAX)
        } else {
            DTAU_MAX
        }
    }

    /// Courant number of the last step evaluated on the current state.
    pub fn courant(&self) -> f64 {
        self.last_dtau * self.max_relative_speed() / self.dy
    }

    /// Advances by `dtau` in `τ`.
    pub fn step(&mut self, dtau: f64) -> Result<(), SimError> {
        if !(dtau > 0.0) {
            return Err(SimError::Config(format!("step must be positive, got {dtau}")));
        }
        let yn = self.state.clone();
        let total = yn.len();
        let hg = dtau * GAMMA_S;
        let tau1 = self.tau + GAMMA_S * dtau;
        let zero = vec![0.0; total];
        let y1 = self.solve_stage(tau1, hg, &yn, &zero, &yn)?;
        let mut f1 = vec![0.0; total];
        self.eval(tau1, &y1, &mut f1)?;
        let explicit: Vec<f64> = (0..total)
            .map(|r| if self.is_differential(r) { dtau * (1.0 - GAMMA_S) * f1[r] } else { 0.0 })
            .collect();
        let tau2 = self.tau + dtau;
        let y2 = self.solve_stage(tau2, hg, &yn, &explicit, &y1)?;

        // Same tableau for φ_τ = S − φ; the linear term is solved exactly per stage.
        let s1 = self.potential_source(tau1, &y1);
        let s2 = self.potential_source(tau2, &y2);
        for i in 0..self.phi.len() {
            let p1 = (self.phi[i] + hg * s1[i]) / (1.0 + hg);
            let k1 = s1[i] - p1;
            self.phi[i] = (self.phi[i] + dtau * (1.0 - GAMMA_S) * k1 + hg * s2[i]) / (1.0 + hg);
        }
        self.state = y2;
        self.tau = tau2;
        self.last_dtau = dtau;
        self.check_state()
    }

    fn check_state(&self) -> Result<(), SimError> {
        let t = self.t();
        if !(self.chi() - self.piston.b(t) > 0.0) {
            return Err(SimError::Collapse { t });
        }
        for i in 0..self.nodes() {
            let hval = self.enthalpy(self.w(i), self.v(i));
            if !(hval > 0.0) {
                return Err(SimError::Vacuum { t, node: i, enthalpy: hval });
            }
        }
        let k = self.nodes() - 1;
        let rho = self.gas.enthalpy_inverse_unchecked(self.enthalpy(self.w(k), self.v(k)));
        let margin = rho / self.gas.rho0 - 1.0;
        if !(margin > 0.0) {
            return Err(SimError::Entropy { t, margin });
        }
        let courant = self.courant();
        if courant > 1.0 {
            return Err(SimError::Cfl { t, courant });
        }
        Ok(())
    }

    pub fn shock_snapshot(&self) -> Result<ShockSnapshot, SimError> {
        let t = self.t();
        Ok(ShockSnapshot { t, zeta: self.chi() * t, speed: self.shock_speed(&self.state)? })
    }

    /// Similarity coordinate `s` of each node.
    pub fn s_nodes(&self) -> Vec<f64> {
        let beta = self.piston.b(self.t());
        let len = self.chi() - beta;
        self.y.iter().map(|&yi| beta + yi * len).collect()
    }

    /// `max |f_a|` over the layer.
    pub fn modified_background_factor(&self) -> Result<f64, SimError> {
        let t = self.t();
        let e = self.modified.e_coefficient(t)?;
        let sigma = self.piston.sigma(t);
        Ok(self.s_nodes().iter().map(|&s| (e * (t * s - sigma)).abs()).fold(0.0, f64::max))
    }

    /// Diagnostics of the current state; `prev` supplies the shock data
    /// of the previous record for the Rankine–Hugoniot check.
    pub fn record(&self, prev: Option<ShockSnapshot>) -> Result<Record, SimError> {
        let t = self.t();
        let now = self.shock_snapshot()?;
        let s0 = self.sol.s0;
        let e = self.modified.e_coefficient(t)?;
        let s = self.s_nodes();
        let mut sup_dev = 0.0f64;
        for (i, &si) in s.iter().enumerate() {
            let grad = self.modified.at(t, t * si, e)?.grad;
            sup_dev = sup_dev.max((self.w(i) - grad).abs());
        }
        let rh_residual = match prev {
            Some(p) => ((now.zeta - p.zeta) / (now.t - p.t) - 0.5 * (p.speed + now.speed)).abs() / s0,
            None => 0.0,
        };
        // Trapezoid for L∫ρ s^{n−1} dy against the swept mass ρ₀χⁿ/n.
        let len = self.chi() - self.piston.b(t);
        let nm1 = (self.n - 1) as i32;
        let integrand: Vec<f64> = (0..self.nodes())
            .map(|i| self.gas.enthalpy_inverse_unchecked(self.enthalpy(self.w(i), self.v(i))) * s[i].powi(nm1))
            .collect();
        let mass: f64 = (0..self.nodes() - 1)
            .map(|i| 0.5 * (integrand[i] + integrand[i + 1]) * (self.y[i + 1] - self.y[i]))
            .sum::<f64>()
            * len;
        let swept = self.gas.rho0 * self.chi().powi(self.n as i32) / self.n as f64;
        let k = self.nodes() - 1;
        let rho_n = self.gas.enthalpy_inverse_unchecked(self.enthalpy(self.w(k), self.v(k)));
        Ok(Record {
            t,
            zeta: now.zeta,
            sigma: self.piston.sigma(t),
            sup_dev,
            self_similar_dev: (self.chi() - s0).abs(),
            rh_residual,
            mass_residual: (mass - swept).abs() / swept,
            entropy_margin: rho_n / self.gas.rho0 - 1.0,
            continuity: self.phi[k].abs() / (self.sol.b0 * self.sol.b0),
            courant: self.courant(),
        })
    }

    pub fn state(&self) -> SimState {
        let t = self.t();
        SimState {
            t,
            sigma: self.piston.sigma(t),
            zeta: self.chi() * t,
            y: self.y.clone(),
            phi: self.phi.iter().map(|p| p * t).collect(),
            phi_t: (0..self.nodes()).map(|i| self.v(i)).collect(),
            phi_r: (0..self.nodes()).map(|i| self.w(i)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::solve_extended;
    use crate::simulator::Perturbation;

    fn setup(b0: f64, grid: usize) -> (SelfSimilarSolution, SimConfig) {
        let cfg = SimConfig { b0, eps: 0.0, perturbation: Perturbation::None, grid_points: grid, ..SimConfig::default() };
        let sol = solve_extended(b0, &cfg.gas().unwrap(), 3, 2048).unwrap();
        (sol, cfg)
    }

    #[test]
    fn initial_state_satisfies_constraints() {
        let (sol, cfg) = setup(10.0, 64);
        let sim = Simulator::init_from_background(&sol, &cfg).unwrap();
        let mut f = vec![0.0; 2 * 64 + 2];
        sim.eval(0.0, &sim.state, &mut f).unwrap();
        assert!(f[0].abs() < 1e-12);
        assert!(f[127].abs() < 1e-10, "{}", f[127]);
        assert!(f[129].abs() < 1e-10 * 10.0, "{}", f[129]);
    }

    #[test]
    fn background_is_nearly_stationary() {
        let (sol, cfg) = setup(10.0, 128);
        let sim = Simulator::init_from_background(&sol, &cfg).unwrap();
        let mut f = vec![0.0; 2 * 128 + 2];
        sim.eval(0.0, &sim.state, &mut f).unwrap();
        // Cell rows are O(Δy²) truncation of an exact steady state.
        let worst = (1..255).map(|r| f[r].abs() / sim.scale(r - 1)).fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn jacobian_matches_directional_derivative() {
        let (sol, cfg) = setup(5.0, 40);
        let sim = Simulator::init_from_background(&sol, &cfg).unwrap();
        let total = sim.state.len();
        let yn = sim.state.clone();
        let zero = vec![0.0; total];
        let hg = 0.01;
        let mut jac = sim.build_jacobian(0.0, hg, &yn, &yn, &zero).unwrap();
        let _ = &mut jac;
        // J⁻¹(R(Y+d) − R(Y)) ≈ d for a small smooth direction.
        let d: Vec<f64> = (0..total).map(|j| 1e-7 * sim.scale(j) * ((j as f64) * 0.37).sin()).collect();
        let mut yp = yn.clone();
        for j in 0..total {
            yp[j] += d[j];
        }
        let (mut r0, mut r1) = (vec![0.0; total], vec![0.0; total]);
        sim.stage_residual(0.0, hg, &yn, &yn, &zero, &mut r0).unwrap();
        sim.stage_residual(0.0, hg, &yp, &yn, &zero, &mut r1).unwrap();
        let mut diff: Vec<f64> = (0..total).map(|j| r1[j] - r0[j]).collect();
        jac.solve(&mut diff);
        let err = (0..total).map(|j| (diff[j] - d[j]).abs() / (1e-7 * sim.scale(j))).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }
}
