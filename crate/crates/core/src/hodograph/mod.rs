//! Partial hodograph formulation around the background flow.
//!
//! The unknown `ψ = s − b − φ/b₀` is written in `(T, R, ω)` with
//! `R = (s−b)/ψ + 1`, which maps the piston to `R = 1` and the shock to
//! `R = 2`. This module evaluates the resulting coefficients and checks
//! their structure on the background.

pub mod checks;
pub mod coeffs;
pub mod psi_hat;

pub use checks::*;
pub use coeffs::*;
pub use psi_hat::*;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HodographError {
    #[error("singular state at R = {r}: psi + (R-1) psi_R = {denominator:e}")]
    Singular { r: f64, denominator: f64 },
    #[error("vacuum at R = {r}: Bernoulli argument {argument:e} is not positive")]
    Vacuum { r: f64, argument: f64 },
    #[error("R(s) is not increasing near s = {s}; the background is corrupted")]
    NonMonotone { s: f64 },
    #[error(transparent)]
    Background(#[from] crate::background::BackgroundError),
}
