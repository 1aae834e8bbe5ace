//! Power-law decay fits of a deviation series.

use super::SimError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    /// `(t, deviation)` samples inside the window and above the floor.
    pub series: Vec<(f64, f64)>,
    /// `−slope` of `ln(deviation)` against `ln(1+t)`.
    pub m0_est: f64,
    /// RMS residual of the regression in log space.
    pub residual: f64,
    pub window: (f64, f64),
    /// Samples below this value are treated as discretization noise.
    pub floor: f64,
    pub excluded_below_floor: usize,
}

/// Least-squares decay exponent over `window`.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64), floor: f64) -> Result<DecayFit, SimError> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi >= 10.0 * lo * (1.0 - 1e-12)) {
        return Err(SimError::Fit(format!("window [{lo}, {hi}] spans less than one decade")));
    }
    let inside: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= lo && t <= hi).collect();
    if let Some(&(t, v)) = inside.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(SimError::Fit(format!(
            "non-positive deviation {v:e} at t = {t}: the series has reached the discretization floor, shrink the window"
        )));
    }
    let kept: Vec<(f64, f64)> = inside.iter().copied().filter(|&(_, v)| v >= floor).collect();
    if kept.len() < 3 {
        return Err(SimError::Fit(format!(
            "only {} samples above the floor {floor:e} in [{lo}, {hi}]",
            kept.len()
        )));
    }
    let xs: Vec<f64> = kept.iter().map(|&(t, _)| (1.0 + t).ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|&(_, v)| v.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
    Ok(DecayFit {
        excluded_below_floor: inside.len() - kept.len(),
        series: kept,
        m0_est: -slope,
        residual: (rss / m).sqrt(),
        window,
        floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn grid() -> Vec<f64> {
        (0..200).map(|k| 1.0 + 99.0 * k as f64 / 199.0).collect()
    }

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = grid().into_iter().map(|t| (t, 3.0 * (1.0 + t).powf(-1.0))).collect();
        let f = fit_decay(&s, (5.0, 50.0), 0.0).unwrap();
        assert!((f.m0_est - 1.0).abs() < 0.01);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = StdRng::seed_from_u64(3);
        let s: Vec<(f64, f64)> = grid()
            .into_iter()
            .map(|t| (t, (1.0 + t).powf(-0.8) * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))))
            .collect();
        let f = fit_decay(&s, (5.0, 50.0), 0.0).unwrap();
        assert!((f.m0_est - 0.8).abs() < 0.05);
    }

    #[test]
    fn floor_and_sign_handling() {
        let s: Vec<(f64, f64)> = grid().into_iter().map(|t| (t, (1.0 + t).powf(-2.0))).collect();
        let f = fit_decay(&s, (5.0, 50.0), 1e-3).unwrap();
        assert!(f.excluded_below_floor > 0);
        let mut bad = s.clone();
        bad[20].1 = 0.0;
        assert!(matches!(fit_decay(&bad, (1.0, 100.0), 0.0), Err(SimError::Fit(_))));
        assert!(fit_decay(&s, (5.0, 10.0), 0.0).is_err());
    }
}
