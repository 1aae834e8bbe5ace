//! Radial modified background `Φ_a = (1 + f_a)Φ̂` with
//! `f_a(t, r) = E(t)(r − σ(t))`, chosen so that `∂_rΦ_a = σ̇` on the piston.

use super::{PistonProfile, SimError};
use crate::background::SelfSimilarSolution;

#[derive(Debug, Clone, Copy)]
pub struct ModifiedBackground<'a> {
    pub sol: &'a SelfSimilarSolution,
    pub piston: PistonProfile,
}

/// Values of the modified background at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedPoint {
    pub f_a: f64,
    /// `∂_rΦ_a`.
    pub grad: f64,
}

impl<'a> ModifiedBackground<'a> {
    pub fn new(sol: &'a SelfSimilarSolution, piston: PistonProfile) -> Self {
        ModifiedBackground { sol, piston }
    }

    /// `E(t) = (σ̇ − û(σ/t)) / (tφ̂(σ/t))`.
    pub fn e_coefficient(&self, t: f64) -> Result<f64, SimError> {
        let beta = self.piston.b(t);
        let p = self.sol.eval_s(beta)?;
        let denom = t * p.phi;
        let num = self.piston.sigma_dot(t) - p.u;
        if num == 0.0 {
            return Ok(0.0);
        }
        if !(denom.abs() > 1e-14 * self.sol.b0 * self.sol.b0 * t) {
            return Err(SimError::ModifiedBackground { t, phi: p.phi });
        }
        Ok(num / denom)
    }

    pub fn at(&self, t: f64, r: f64, e: f64) -> Result<ModifiedPoint, SimError> {
        let p = self.sol.eval_s(r / t)?;
        let f_a = e * (r - self.piston.sigma(t));
        Ok(ModifiedPoint { f_a, grad: p.u * (1.0 + f_a) + t * p.phi * e })
    }

    /// `∂_rΦ_a − σ̇` at the piston.
    pub fn piston_residual(&self, t: f64) -> Result<f64, SimError> {
        let e = self.e_coefficient(t)?;
        Ok(self.at(t, self.piston.sigma(t), e)?.grad - self.piston.sigma_dot(t))
    }
}
