//! The background in hodograph form: `ψ̂(R)` on a uniform grid in `[1, 2]`.

use super::{HodographError, HodographState};
use crate::background::SelfSimilarSolution;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PsiHat {
    pub b0: f64,
    pub xi0: f64,
    /// Uniform grid `R_k = 1 + k/(m−1)`.
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    /// `ψ̂'` by second-order finite differences on the grid.
    pub dpsi: Vec<f64>,
    /// `ψ̂''` by second-order finite differences on the grid.
    pub d2psi: Vec<f64>,
    /// `ψ̂'` from the background ODE, `ψ_ξ / R_ξ`.
    pub dpsi_exact: Vec<f64>,
    /// `s(R)`.
    pub s_of_r: Vec<f64>,
    /// Offset `ξ(R) = s − b₀`.
    pub xi: Vec<f64>,
    /// `b₀ − û(s(R)) = w − ξ`.
    pub b0_minus_u: Vec<f64>,
}

/// `ψ̂ = ξ₀ + J/b₀` and `R = ξ/ψ̂ + 1` at one background offset.
fn psi_and_r(sol: &SelfSimilarSolution, xi: f64) -> Result<(f64, f64, f64), HodographError> {
    let p = sol.eval_xi(xi)?;
    let psi = sol.xi0 + p.defect / sol.b0;
    Ok((psi, xi / psi + 1.0, p.w - xi))
}

/// First and second derivatives by centered differences, with
/// second-order one-sided stencils at both ends.
pub fn grid_derivatives(f: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let m = f.len();
    assert!(m >= 4, "need at least four samples");
    let mut d1 = vec![0.0; m];
    let mut d2 = vec![0.0; m];
    for k in 1..m - 1 {
        d1[k] = (f[k + 1] - f[k - 1]) / (2.0 * h);
        d2[k] = (f[k + 1] - 2.0 * f[k] + f[k - 1]) / (h * h);
    }
    d1[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d1[m - 1] = (3.0 * f[m - 1] - 4.0 * f[m - 2] + f[m - 3]) / (2.0 * h);
    d2[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h);
    d2[m - 1] = (2.0 * f[m - 1] - 5.0 * f[m - 2] + 4.0 * f[m - 3] - f[m - 4]) / (h * h);
    (d1, d2)
}

/// Builds `ψ̂` on `m` uniform points of `[1, 2]` from the background.
pub fn psi_hat_from_background(sol: &SelfSimilarSolution, m: usize) -> Result<PsiHat, HodographError> {
    if m < 4 {
        return Err(HodographError::Background(crate::background::BackgroundError::Input(format!(
            "R-grid needs at least 4 points, got {m}"
        ))));
    }
    let nodes: Vec<usize> = sol.interior().collect();
    let mut node_r = Vec::with_capacity(nodes.len());
    for &i in &nodes {
        let psi = sol.xi0 + sol.phi_defect[i] / sol.b0;
        let r = sol.xi[i] / psi + 1.0;
        if let Some(&prev) = node_r.last() {
            if !(r > prev) {
                return Err(HodographError::NonMonotone { s: sol.s[i] });
            }
        }
        node_r.push(r);
    }

    let h = 1.0 / (m - 1) as f64;
    let mut out = PsiHat {
        b0: sol.b0,
        xi0: sol.xi0,
        r: Vec::with_capacity(m),
        psi: Vec::with_capacity(m),
        dpsi: Vec::new(),
        d2psi: Vec::new(),
        dpsi_exact: Vec::with_capacity(m),
        s_of_r: Vec::with_capacity(m),
        xi: Vec::with_capacity(m),
        b0_minus_u: Vec::with_capacity(m),
    };
    for k in 0..m {
        let target = if k == m - 1 { 2.0 } else { 1.0 + k as f64 * h };
        let xi = if k == 0 {
            0.0
        } else if k == m - 1 {
            sol.xi0
        } else {
            let j = node_r.partition_point(|&r| r <= target).clamp(1, node_r.len() - 1);
            let (mut lo, mut hi) = (sol.xi[nodes[j - 1]], sol.xi[nodes[j]]);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if psi_and_r(sol, mid)?.1 < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let (psi, _, b0_minus_u) = psi_and_r(sol, xi)?;
        // ψ_ξ = (w − ξ)/b₀, R_ξ = (ψ − ξψ_ξ)/ψ².
        let psi_xi = b0_minus_u / sol.b0;
        let r_xi = (psi - xi * psi_xi) / (psi * psi);
        out.r.push(target);
        out.psi.push(psi);
        out.dpsi_exact.push(psi_xi / r_xi);
        out.s_of_r.push(sol.b0 + xi);
        out.xi.push(xi);
        out.b0_minus_u.push(b0_minus_u);
    }
    let (d1, d2) = grid_derivatives(&out.psi, h);
    out.dpsi = d1;
    out.d2psi = d2;
    Ok(out)
}

impl PsiHat {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.len() - 1) as f64
    }

    /// Radial background state at grid point `k`, with the exact `ψ̂'`.
    pub fn state(&self, k: usize) -> HodographState {
        HodographState::radial(self.b0, self.r[k], self.psi[k], self.dpsi_exact[k])
    }

    /// Max over the grid of `|(b₀ + (1−R)(b₀−û))ψ̂' − (b₀−û)ψ̂|` with the
    /// finite-difference `ψ̂'`, normalized by `ξ₀²`.
    pub fn identity_residual(&self) -> f64 {
        (0..self.len())
            .map(|k| {
                let d = self.b0_minus_u[k];
                ((self.b0 + (1.0 - self.r[k]) * d) * self.dpsi[k] - d * self.psi[k]).abs()
            })
            .fold(0.0, f64::max)
            / (self.xi0 * self.xi0)
    }

    /// CSV with columns `R, s, psi, dpsi, d2psi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("R,s,psi,dpsi,d2psi\n");
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.r[k], self.s_of_r[k], self.psi[k], self.dpsi[k], self.d2psi[k]
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::solve_background;
    use crate::gas::GasParams;

    #[test]
    fn grid_derivatives_exact_on_quadratics() {
        let h = 0.1;
        let f: Vec<f64> = (0..11).map(|k| {
            let x = k as f64 * h;
            2.0 * x * x - x + 3.0
        }).collect();
        let (d1, d2) = grid_derivatives(&f, h);
        for k in 0..11 {
            let x = k as f64 * h;
            assert!((d1[k] - (4.0 * x - 1.0)).abs() < 1e-10);
            assert!((d2[k] - 4.0).abs() < 1e-8);
        }
    }

    #[test]
    fn endpoints_and_monotone_grid() {
        let gas = GasParams::new(1.0, 1.4, 1.0).unwrap();
        let sol = solve_background(10.0, &gas, 3, 2048).unwrap();
        let ph = psi_hat_from_background(&sol, 33).unwrap();
        assert_eq!(ph.r[0], 1.0);
        assert_eq!(*ph.r.last().unwrap(), 2.0);
        // ψ̂(2) = s₀ − b₀ since φ̂(s₀) = 0.
        assert!((ph.psi[32] - sol.xi0).abs() <= 1e-12 * sol.xi0);
        assert!(ph.dpsi_exact[0].abs() <= 1e-10 * ph.psi[0]);
        assert!(ph.xi.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn identity_residual_is_second_order() {
        let gas = GasParams::new(1.0, 1.4, 1.0).unwrap();
        let sol = solve_background(3.0, &gas, 3, 2048).unwrap();
        let r: Vec<f64> = [17, 33, 65].iter().map(|&m| psi_hat_from_background(&sol, m).unwrap().identity_residual()).collect();
        assert!(r[0] / r[1] > 3.0 && r[1] / r[2] > 3.0, "{r:?}");
    }
}
