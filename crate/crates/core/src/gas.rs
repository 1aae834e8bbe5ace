//! Polytropic gas relations: pressure law `P = A ρ^γ`, sound speed,
//! specific enthalpy and the Bernoulli density map.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GasError {
    #[error("invalid gas parameters: {0}")]
    InvalidParams(String),
    #[error("{quantity} must be positive, got {value}")]
    Domain { quantity: &'static str, value: f64 },
    #[error("vacuum: Bernoulli argument {argument:e} is below the round-off floor {floor:e}")]
    Vacuum { argument: f64, floor: f64 },
}

/// Relative floor below which the Bernoulli argument counts as vacuum.
pub const VACUUM_FLOOR: f64 = 1e-14;

/// Constants of a polytropic gas at rest with density `rho0`.
///
/// `bernoulli` is derived and always equals `h(rho0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    pub a: f64,
    pub gamma: f64,
    pub rho0: f64,
    pub bernoulli: f64,
}

impl GasParams {
    pub fn new(a: f64, gamma: f64, rho0: f64) -> Result<Self, GasError> {
        if !(gamma > 1.0 && gamma < 3.0) {
            return Err(GasError::InvalidParams(format!("gamma = {gamma} outside (1, 3)")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(GasError::InvalidParams(format!("A = {a} must be positive")));
        }
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(GasError::InvalidParams(format!("rho0 = {rho0} must be positive")));
        }
        let mut gas = GasParams { a, gamma, rho0, bernoulli: 0.0 };
        gas.bernoulli = gas.enthalpy_unchecked(rho0);
        Ok(gas)
    }

    /// `c²(ρ) = Aγρ^{γ−1}` without domain checks (hot loops).
    #[inline]
    pub fn csq_unchecked(&self, rho: f64) -> f64 {
        self.a * self.gamma * rho.powf(self.gamma - 1.0)
    }

    #[inline]
    pub fn enthalpy_unchecked(&self, rho: f64) -> f64 {
        self.csq_unchecked(rho) / (self.gamma - 1.0)
    }

    /// Closed-form inverse of the enthalpy, unchecked.
    #[inline]
    pub fn enthalpy_inverse_unchecked(&self, hval: f64) -> f64 {
        ((self.gamma - 1.0) * hval / (self.a * self.gamma)).powf(1.0 / (self.gamma - 1.0))
    }

    pub fn pressure(&self, rho: f64) -> Result<f64, GasError> {
        check_positive("density", rho)?;
        Ok(self.a * rho.powf(self.gamma))
    }

    pub fn sound_speed(&self, rho: f64) -> Result<f64, GasError> {
        check_positive("density", rho)?;
        Ok(self.csq_unchecked(rho).sqrt())
    }

    pub fn enthalpy(&self, rho: f64) -> Result<f64, GasError> {
        check_positive("density", rho)?;
        Ok(self.enthalpy_unchecked(rho))
    }

    /// `h'(ρ) = c²(ρ)/ρ`.
    pub fn enthalpy_derivative(&self, rho: f64) -> Result<f64, GasError> {
        check_positive("density", rho)?;
        Ok(self.csq_unchecked(rho) / rho)
    }

    pub fn enthalpy_inverse(&self, hval: f64) -> Result<f64, GasError> {
        check_positive("enthalpy", hval)?;
        Ok(self.enthalpy_inverse_unchecked(hval))
    }

    /// Density `h⁻¹(B₀ − φ_t − |∇φ|²/2)` of a potential flow state.
    pub fn density_from_state(&self, phi_t: f64, grad_sq: f64) -> Result<f64, GasError> {
        let argument = self.bernoulli - phi_t - 0.5 * grad_sq;
        let floor = VACUUM_FLOOR * self.bernoulli;
        if !(argument > floor) {
            return Err(GasError::Vacuum { argument, floor });
        }
        Ok(self.enthalpy_inverse_unchecked(argument))
    }
}

fn check_positive(quantity: &'static str, value: f64) -> Result<(), GasError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(GasError::Domain { quantity, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn air() -> GasParams {
        GasParams::new(1.0, 1.4, 1.0).unwrap()
    }

    #[test]
    fn bernoulli_constant_is_ambient_enthalpy() {
        let gas = GasParams::new(2.5, 1.67, 0.3).unwrap();
        assert_eq!(gas.bernoulli, gas.enthalpy(0.3).unwrap());
        let c0 = gas.sound_speed(0.3).unwrap();
        assert!((c0 * c0 / (gas.gamma - 1.0) - gas.bernoulli).abs() < 1e-14 * gas.bernoulli);
    }

    #[test]
    fn sound_speed_unit_density() {
        assert!((air().sound_speed(1.0).unwrap() - 1.4f64.sqrt()).abs() < 1e-15);
        assert!((air().sound_speed(1.0).unwrap() - 1.18322).abs() < 1e-5);
    }

    #[test]
    fn enthalpy_at_two() {
        let expected = 1.4 * 2f64.powf(0.4) / 0.4;
        assert!((air().enthalpy(2.0).unwrap() - expected).abs() < 1e-14 * expected);
    }

    #[test]
    fn enthalpy_derivative_matches_difference_quotient() {
        let gas = air();
        let (rho, d) = (1.3, 1e-5);
        let fd = (gas.enthalpy(rho + d).unwrap() - gas.enthalpy(rho - d).unwrap()) / (2.0 * d);
        let exact = gas.enthalpy_derivative(rho).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn inverse_recovers_ambient_and_bisection_root() {
        let gas = air();
        assert!((gas.enthalpy_inverse(gas.bernoulli).unwrap() - 1.0).abs() < 1e-14);
        let target = gas.enthalpy(0.5).unwrap();
        let (mut lo, mut hi) = (1e-6, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gas.enthalpy(mid).unwrap() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let inv = gas.enthalpy_inverse(target).unwrap();
        assert!((inv - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!((gas.enthalpy_inverse(gas.enthalpy(3.7).unwrap()).unwrap() / 3.7 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn density_from_state_limits() {
        let gas = air();
        assert!((gas.density_from_state(0.0, 0.0).unwrap() - 1.0).abs() < 1e-14);
        let h2 = gas.enthalpy(2.0).unwrap();
        let rho = gas.density_from_state(gas.bernoulli - h2, 0.0).unwrap();
        assert!((rho - 2.0).abs() < 1e-12);
        assert!(matches!(
            gas.density_from_state(gas.bernoulli, 0.0),
            Err(GasError::Vacuum { .. })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GasParams::new(1.0, 3.5, 1.0).is_err());
        assert!(GasParams::new(1.0, 1.0, 1.0).is_err());
        assert!(GasParams::new(-1.0, 1.4, 1.0).is_err());
        assert!(air().sound_speed(0.0).is_err());
        assert!(air().enthalpy(-1.0).is_err());
        assert!(air().enthalpy_inverse(0.0).is_err());
    }

    #[test]
    fn monotone_and_invertible_on_dense_grid() {
        let gas = GasParams::new(0.7, 1.25, 2.0).unwrap();
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=2000 {
            let rho = gas.rho0 / 10.0 * (1000f64).powf(k as f64 / 2000.0);
            let (h, c) = (gas.enthalpy(rho).unwrap(), gas.sound_speed(rho).unwrap());
            if let Some((hp, cp)) = prev {
                assert!(h > hp && c > cp);
            }
            prev = Some((h, c));
            assert!((gas.enthalpy_inverse(h).unwrap() / rho - 1.0).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn sound_speed_increasing(r1 in 1e-3f64..1e3, r2 in 1e-3f64..1e3, gamma in 1.01f64..2.99) {
            prop_assume!(r1 < r2);
            let gas = GasParams::new(1.0, gamma, 1.0).unwrap();
            prop_assert!(gas.sound_speed(r1).unwrap() < gas.sound_speed(r2).unwrap());
        }

        #[test]
        fn bernoulli_residual(phi_t in -5.0f64..2.0, grad_sq in 0.0f64..4.0, gamma in 1.05f64..2.9) {
            let gas = GasParams::new(1.3, gamma, 1.0).unwrap();
            prop_assume!(gas.bernoulli - phi_t - 0.5 * grad_sq > 1e-3);
            let rho = gas.density_from_state(phi_t, grad_sq).unwrap();
            let res = gas.enthalpy(rho).unwrap() + phi_t + 0.5 * grad_sq - gas.bernoulli;
            prop_assert!(res.abs() < 1e-10 * (1.0 + gas.bernoulli.abs() + phi_t.abs()));
        }
    }
}
