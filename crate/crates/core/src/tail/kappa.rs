//! `κ` from the Gaussian decay of the tail, `ln m(t) ∼ −κ²t²/2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::tail::TailGrid;

#[derive(Debug, Clone, Copy)]
pub struct KappaFitConfig {
    /// Share of the usable (positive-m, positive-t) points, taken from the top in t.
    pub window_fraction: f64,
    /// `p` in the model `ln m + p ln t = c₀ + c₁t + c₂t²`. The tail of a
    /// Gaussian orthant with interior decay point behaves like `t^{-3}` times the
    /// Gaussian factor.
    pub log_power: f64,
    pub min_points: usize,
    /// Empirical points with fewer exceedances than this are left out.
    pub min_count: f64,
}

impl Default for KappaFitConfig {
    fn default() -> Self {
        KappaFitConfig { window_fraction: 0.4, log_power: 3.0, min_points: 5, min_count: 20.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaEstimate {
    pub kappa: f64,
    /// `(c₀, c₁, c₂)`, with `c₂ = −κ²/2`.
    pub coefficients: [f64; 3],
    pub log_power: f64,
    pub window: (f64, f64),
    pub points: usize,
    /// Weighted RMS of the fit in `ln m`.
    pub rms: f64,
}

impl KappaEstimate {
    /// Model value of `ln m(t)`.
    pub fn ln_m(&self, t: f64) -> f64 {
        let [c0, c1, c2] = self.coefficients;
        c0 + c1 * t + c2 * t * t - self.log_power * t.ln()
    }
}

pub fn estimate_kappa(tail: &TailGrid) -> Result<KappaEstimate> {
    estimate_kappa_with(tail, &KappaFitConfig::default())
}

pub fn estimate_kappa_with(tail: &TailGrid, cfg: &KappaFitConfig) -> Result<KappaEstimate> {
    if !tail.m.iter().any(|&m| m < 1e-3) {
        return Err(Error::Data("tail never drops below 1e-3; extend the t range".into()));
    }
    let n = tail.sample_count.map(|c| c as f64);
    let usable: Vec<usize> = (0..tail.len())
        .filter(|&i| {
            let (t, m) = (tail.t[i], tail.m[i]);
            t > 0.0 && m > 0.0 && m < 1.0 && n.is_none_or(|n| m * n >= cfg.min_count)
        })
        .collect();
    let take = ((usable.len() as f64 * cfg.window_fraction).ceil() as usize).max(cfg.min_points);
    if usable.len() < take {
        return Err(Error::Data(format!("only {} usable tail points, need {}", usable.len(), take)));
    }
    let window = &usable[usable.len() - take..];
    if window.windows(2).any(|w| tail.m[w[1]] > tail.m[w[0]]) {
        return Err(Error::Data("tail is not monotone in the fitting window".into()));
    }
    // var(ln m̂) ≈ se²/m²
    let weight = |i: usize| match &tail.stderr {
        Some(se) if se[i] > 0.0 => tail.m[i] / se[i],
        _ => 1.0,
    };
    let cols: Vec<Vec<f64>> = (0..3)
        .map(|p| window.iter().map(|&i| weight(i) * tail.t[i].powi(p)).collect())
        .collect();
    let y: Vec<f64> = window
        .iter()
        .map(|&i| weight(i) * (tail.m[i].ln() + cfg.log_power * tail.t[i].ln()))
        .collect();
    let (c, rss) = least_squares(&cols, &y).ok_or_else(|| Error::Data("degenerate kappa fit".into()))?;
    if !(c[2] < 0.0) {
        return Err(Error::Data(format!("tail does not decay like a Gaussian (quadratic coefficient {})", c[2])));
    }
    Ok(KappaEstimate {
        kappa: (-2.0 * c[2]).sqrt(),
        coefficients: [c[0], c[1], c[2]],
        log_power: cfg.log_power,
        window: (tail.t[window[0]], tail.t[window[take - 1]]),
        points: take,
        rms: (rss / take as f64).sqrt(),
    })
}
