//! Numerical construction and verification of self-similar conic shock
//! flows for compressible isentropic potential flow.
//!
//! * [`gas`]: polytropic equation of state.
//! * [`background`]: the self-similar piston/shock profile.
//! * [`asymptotics`]: large-piston-speed scaling checks of that profile.
//! * [`hodograph`]: coefficients of the problem after the hodograph change
//!   of variables, with ellipticity and boundary sign checks.
//! * [`certificates`]: coercivity coefficient tables for the weighted
//!   energy estimate and the admissible weight exponents.
//! * [`simulator`]: time-dependent perturbed piston problem.
//! * [`verify`]: sweep-level verification suites.
//! * [`export`]: output directory, artifact hashing and run manifests.
//! * [`cli`]: command line front end.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asymptotics;
pub mod background;
pub mod certificates;
pub mod cli;
pub mod dual;
pub mod export;
pub mod gas;
pub mod hodograph;
pub mod simulator;
pub mod verify;
