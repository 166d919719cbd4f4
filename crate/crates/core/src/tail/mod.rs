//! The law of `X_min = min(X₁, X₂, X₃)` for `X ~ N(0, Σ)`.
//!
//! `m(t) = P(X_min ≥ t)` factors through the section triangle `T` and `κ`:
//! `m(t) = (2π)^{-3/2} ∫₀^∞ e^{-(x+κt)²/2} G(x) dx` with `G(x)` the planar
//! Gaussian mass of `xT`.

pub mod forward;
pub mod kappa;
pub mod laplace;
pub mod sampling;

use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceMatrix3;
use crate::error::{Error, Result};

pub use forward::{normal_cdf, tail_from_sigma, ForwardModel};
pub use kappa::{estimate_kappa, estimate_kappa_with, KappaEstimate, KappaFitConfig};
pub use laplace::{
    gaver_stehfest, gs_weights, laplace_identity_check, radon_from_tail, radon_from_tail_unchecked, InversionConfig,
    LaplaceReport, Prefactor,
};
pub use sampling::{empirical_tail, sample_xmin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSource {
    /// Closed form.
    Analytic,
    /// Numerical quadrature of the forward model.
    Quadrature,
    /// Fractions of Monte Carlo or observed samples.
    Empirical,
}

/// Sampled `t ↦ m(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailGrid {
    pub t: Vec<f64>,
    pub m: Vec<f64>,
    /// Per-point standard error, for empirical tails.
    pub stderr: Option<Vec<f64>>,
    pub source: TailSource,
    pub sample_count: Option<usize>,
}

/// Slack on monotonicity for quadrature noise.
const MONOTONE_SLACK: f64 = 1e-12;

impl TailGrid {
    pub fn new(t: Vec<f64>, m: Vec<f64>, source: TailSource) -> Result<Self> {
        if t.len() != m.len() || t.is_empty() {
            return Err(Error::Data("t and m must be nonempty and of equal length".into()));
        }
        if t.iter().chain(&m).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite tail entry".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Data("t must be strictly increasing".into()));
        }
        if m.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Data("m must lie in [0, 1]".into()));
        }
        if let Some(k) = m.windows(2).position(|w| w[1] > w[0] + MONOTONE_SLACK) {
            return Err(Error::Data(format!("m increases between t = {} and t = {}", t[k], t[k + 1])));
        }
        Ok(TailGrid { t, m, stderr: None, source, sample_count: None })
    }

    pub fn with_stderr(mut self, stderr: Vec<f64>, samples: usize) -> Result<Self> {
        if stderr.len() != self.t.len() || stderr.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Data("standard errors must be finite, nonnegative, one per point".into()));
        }
        self.stderr = Some(stderr);
        self.sample_count = Some(samples);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn is_noiseless(&self) -> bool {
        self.source != TailSource::Empirical
    }

    /// `n` points evenly spaced on `[t_min, t_max]`.
    pub fn uniform(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![t_min];
        }
        (0..n).map(|i| t_min + (t_max - t_min) * i as f64 / (n - 1) as f64).collect()
    }
}

/// `Π (1 − Φ(t/σᵢ))`, the tail of a diagonal covariance.
pub fn diagonal_tail(sigma: &CovarianceMatrix3<f64>, t: &[f64]) -> Result<TailGrid> {
    let e = sigma.entries.0;
    if (0..3).any(|i| (0..3).any(|j| i != j && e[i][j] != 0.0)) || (0..3).any(|i| !(e[i][i] > 0.0)) {
        return Err(Error::NotAdmissible("closed-form tail needs a positive diagonal covariance".into()));
    }
    let m = t
        .iter()
        .map(|&x| (0..3).map(|i| 1.0 - normal_cdf(x / e[i][i].sqrt())).product())
        .collect();
    TailGrid::new(t.to_vec(), m, TailSource::Analytic)
}

/// Realizations of `X_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinSampleSet {
    pub values: Vec<f64>,
    pub seed: u64,
    pub sigma: Option<CovarianceMatrix3<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(TailGrid::new(vec![0.0, 1.0], vec![0.5, 0.6], TailSource::Analytic).is_err());
        assert!(TailGrid::new(vec![1.0, 0.0], vec![0.5, 0.4], TailSource::Analytic).is_err());
        assert!(TailGrid::new(vec![0.0], vec![1.5], TailSource::Analytic).is_err());
        let g = TailGrid::new(vec![0.0, 1.0], vec![0.5, 0.5], TailSource::Empirical).unwrap();
        assert!(!g.is_noiseless());
        assert!(g.with_stderr(vec![0.1], 10).is_err());
    }

    #[test]
    fn identity_closed_form() {
        let g = diagonal_tail(&CovarianceMatrix3::identity(), &[0.0, 1.0]).unwrap();
        assert!((g.m[0] - 0.125).abs() < 1e-15);
        assert!((g.m[1] - 0.158_655_253_931_457_05f64.powi(3)).abs() < 1e-15);
    }
}
