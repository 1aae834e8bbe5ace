//! Large-`b₀` scaling of the background profile.
//!
//! Each item compares a profile quantity with its leading-order form and
//! records the worst normalized deviation over `[b₀, s₀]`; log-log slopes
//! of these deviations against `b₀` measure the correction order.

use crate::background::{solve_background, BackgroundError, SelfSimilarSolution};
use crate::gas::GasParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Item labels in report order.
pub const ITEM_NAMES: [&str; 9] = [
    "shock_speed",
    "velocity",
    "density",
    "supersonic_gap",
    "denominator",
    "forward_characteristic",
    "backward_characteristic",
    "density_slope",
    "velocity_slope",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticItem {
    pub name: String,
    /// One entry per `b₀`: the normalized deviation, or for `density_slope`
    /// the magnitude `b₀·max|ρ̂'|/ρ_lead`.
    pub deviations: Vec<f64>,
    /// Least-squares slope of `ln(deviation)` against `ln b₀`.
    pub slope: Option<f64>,
    /// RMS residual of that regression.
    pub slope_residual: Option<f64>,
    pub monotone_decreasing: bool,
    /// Whether the quantity has the sign the leading order predicts at
    /// every grid point of every case.
    pub sign_holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub n: usize,
    pub gamma: f64,
    pub b0: Vec<f64>,
    pub items: Vec<AsymptoticItem>,
}

impl AsymptoticsReport {
    pub fn item(&self, name: &str) -> Option<&AsymptoticItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

/// Deviations of one background for all nine items, plus sign flags.
pub fn item_deviations(sol: &SelfSimilarSolution) -> ([f64; 9], [bool; 9]) {
    let gas = &sol.gas;
    let g = gas.gamma;
    let b0 = sol.b0;
    let n1 = sol.n as f64 - 1.0;
    let rho_lead = ((g - 1.0) / (2.0 * gas.a * g)).powf(1.0 / (g - 1.0)) * b0.powf(2.0 / (g - 1.0));
    let gap_lead = 0.5 * (3.0 - g) * b0 * b0;
    let den_lead = -0.5 * (g - 1.0) * b0 * b0;
    let char_lead = (0.5 * (g - 1.0)).sqrt() * b0;

    let mut dev = [0.0f64; 9];
    let mut sign = [true; 9];
    dev[0] = sol.xi0 / b0;
    sign[0] = sol.xi0 > 0.0;
    for i in sol.interior() {
        let (xi, w, rho) = (sol.xi[i], sol.w[i], sol.rho[i]);
        let u = sol.u[i];
        let csq = sol.csq(i);
        let c = csq.sqrt();
        let (drho, du) = sol.derivatives(i);
        // û − b₀ = ξ − w without cancellation.
        dev[1] = dev[1].max(((xi - w) / b0).abs());
        dev[2] = dev[2].max((rho / rho_lead - 1.0).abs());
        let gap = u * u - csq;
        dev[3] = dev[3].max((gap / gap_lead - 1.0).abs());
        sign[3] &= gap > 0.0;
        let d = w * w - csq;
        dev[4] = dev[4].max((d / den_lead - 1.0).abs());
        sign[4] &= d < 0.0;
        // û ± c − s = ±c − w.
        let fwd = c - w;
        let bwd = -c - w;
        dev[5] = dev[5].max((fwd / char_lead - 1.0).abs());
        dev[6] = dev[6].max((bwd / -char_lead - 1.0).abs());
        sign[5] &= fwd > 0.0;
        sign[6] &= bwd < 0.0;
        dev[7] = dev[7].max(b0 * drho.abs() / rho_lead);
        dev[8] = dev[8].max((du / -n1 - 1.0).abs());
        sign[8] &= du < 0.0;
    }
    (dev, sign)
}

/// Least-squares slope and RMS residual of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() < 2 || x.len() != y.len() || y.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    Some((slope, (rss / m).sqrt()))
}

/// Solves one background per `b₀` (in parallel) and tabulates every item.
pub fn verify_asymptotics(
    b0_list: &[f64],
    gas: &GasParams,
    n: usize,
    grid_size: usize,
) -> Result<AsymptoticsReport, BackgroundError> {
    let per_case: Vec<([f64; 9], [bool; 9])> = b0_list
        .par_iter()
        .map(|&b0| solve_background(b0, gas, n, grid_size).map(|s| item_deviations(&s)))
        .collect::<Result<_, _>>()?;
    let items = ITEM_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let deviations: Vec<f64> = per_case.iter().map(|c| c.0[k]).collect();
            let fit = loglog_slope(b0_list, &deviations);
            AsymptoticItem {
                name: name.to_string(),
                monotone_decreasing: deviations.windows(2).all(|p| p[1] < p[0]),
                sign_holds: per_case.iter().all(|c| c.1[k]),
                slope: fit.map(|f| f.0),
                slope_residual: fit.map(|f| f.1),
                deviations,
            }
        })
        .collect();
    Ok(AsymptoticsReport { n, gamma: gas.gamma, b0: b0_list.to_vec(), items })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_slope() {
        let x = [10.0, 20.0, 40.0, 80.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.0)).collect();
        let (s, r) = loglog_slope(&x, &y).unwrap();
        assert!((s + 2.0).abs() < 1e-12 && r < 1e-12);
        assert!(loglog_slope(&x, &[1.0, 0.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn supersonic_gap_shrinks() {
        let gas = GasParams::new(1.0, 1.4, 1.0).unwrap();
        let rep = verify_asymptotics(&[10.0, 20.0, 40.0, 80.0], &gas, 3, 512).unwrap();
        let gap = rep.item("supersonic_gap").unwrap();
        assert!(gap.monotone_decreasing && gap.sign_holds);
        assert!(gap.deviations.iter().all(|&d| d > 0.0));
        assert!(rep.item("denominator").unwrap().sign_holds);
        assert!(rep.item("velocity_slope").unwrap().sign_holds);
    }
}
