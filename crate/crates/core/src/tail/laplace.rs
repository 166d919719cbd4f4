//! Laplace-transform chain linking the tail to the circular transform.
//!
//! With `h(y) = e^{-y²/2} G(y)` and `g(s) = R_T(√s)`:
//!
//! * `(2π)^{3/2} e^{t²/2} m(t/κ) = ∫₀^∞ e^{-ty} h(y) dy`
//! * `G(√(2x)) / x = ∫₀^∞ e^{-xs} g(s) ds`
//!
//! so `g = L⁻¹[x ↦ P(x) · h(√(2x))]` with `P(x) = eˣ/x`. The other candidate
//! prefactor `eˣ/√(2x)` is kept so the identity check can tell them apart.

use std::f64::consts::{LN_2, TAU};
use std::sync::Arc;

use serde::Serialize;

use crate::covariance::CovarianceMatrix3;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_breaks, QuadOptions};
use crate::radon::atoms::{radon_from_atoms, AtomSet};
use crate::radon::profile::RadonProfile;
use crate::tail::forward::ForwardModel;
use crate::tail::kappa::{estimate_kappa, KappaEstimate};
use crate::tail::TailGrid;

/// Gaver–Stehfest weights `V_k`, `k = 1..=order` (order even).
pub fn gs_weights(order: usize) -> Vec<f64> {
    assert!(order >= 2 && order % 2 == 0, "Gaver–Stehfest order must be even");
    let half = order / 2;
    let fact = |n: usize| (1..=n).fold(1.0f64, |p, i| p * i as f64);
    (1..=order)
        .map(|k| {
            let mut s = 0.0;
            for j in k.div_ceil(2)..=k.min(half) {
                s += (j as f64).powi(half as i32) * fact(2 * j)
                    / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
            }
            if (k + half) % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect()
}

/// `f(s) ≈ (ln2/s) Σ V_k F(k ln2/s)`.
pub fn gaver_stehfest(f: &dyn Fn(f64) -> f64, s: f64, weights: &[f64]) -> f64 {
    let a = LN_2 / s;
    a * weights.iter().enumerate().map(|(k, v)| v * f((k + 1) as f64 * a)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Prefactor {
    /// `eˣ/x`
    ExpOverX,
    /// `eˣ/√(2x)`
    ExpOverSqrt2X,
}

impl Prefactor {
    pub const ALL: [Prefactor; 2] = [Prefactor::ExpOverX, Prefactor::ExpOverSqrt2X];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Prefactor::ExpOverX => x.exp() / x,
            Prefactor::ExpOverSqrt2X => x.exp() / (2.0 * x).sqrt(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Prefactor::ExpOverX => "exp(x)/x",
            Prefactor::ExpOverSqrt2X => "exp(x)/sqrt(2x)",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityPoint {
    pub arg: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub relative: f64,
}

impl IdentityPoint {
    fn new(arg: f64, lhs: f64, rhs: f64) -> Self {
        IdentityPoint { arg, lhs, rhs, relative: ((lhs - rhs) / rhs).abs() }
    }
}

fn max_rel(points: &[IdentityPoint]) -> f64 {
    points.iter().map(|p| p.relative).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct PrefactorTrial {
    pub prefactor: Prefactor,
    pub label: &'static str,
    pub points: Vec<IdentityPoint>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplaceReport {
    /// tail side against the transform of `h`, per `t`
    pub identity_i: Vec<IdentityPoint>,
    /// `G(√(2x))/x` against the transform of `g`, per `x`
    pub identity_ii: Vec<IdentityPoint>,
    /// composite relation per candidate prefactor, per `t`
    pub identity_iii: Vec<PrefactorTrial>,
    /// single inversion of the exact outer transform, per `ρ` (diagnostic)
    pub outer_inversion: Vec<IdentityPoint>,
    pub max_residual_i: f64,
    pub max_residual_ii: f64,
    /// The unique candidate within the acceptance threshold, if exactly one is.
    pub adjudicated: Option<Prefactor>,
}

/// Threshold a candidate prefactor must meet in the composite relation.
pub const PREFACTOR_THRESHOLD: f64 = 1e-4;

fn tight() -> QuadOptions {
    QuadOptions { rel_tol: 1e-11, ..Default::default() }
}

/// `∫₀^∞ e^{-xs} R_T(√s) ds`, split at the squared atom radii.
fn outer_transform(atoms: &AtomSet<f64>, x: f64) -> Result<f64> {
    let mut breaks: Vec<f64> = vec![0.0];
    breaks.extend(atoms.atoms.iter().flat_map(|a| [a.a * a.a, a.b * a.b]));
    let top = atoms.max_b() * atoms.max_b();
    if x > 0.0 {
        breaks.push((1.0 / x).min(top));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let f = |s: f64| (-x * s).exp() * radon_from_atoms(atoms, s.sqrt());
    integrate_breaks(&f, &breaks, &tight()).map(|r| r.0)
}

fn scaled_tail(model: &ForwardModel, t: f64) -> Result<f64> {
    Ok(TAU.powf(1.5) * (t * t / 2.0).exp() * model.m(t / model.kappa)?)
}

/// Forward-direction residuals of the Laplace chain for `Σ`.
pub fn laplace_identity_check(
    sigma: &CovarianceMatrix3<f64>,
    t_values: &[f64],
    x_values: &[f64],
    rho_values: &[f64],
) -> Result<LaplaceReport> {
    let model = ForwardModel::from_sigma(sigma)?;
    let atoms = &model.atoms;
    const Y_MAX: f64 = 12.0;

    let mut identity_i = Vec::new();
    for &t in t_values {
        let lhs = scaled_tail(&model, t)?;
        let f = |y: f64| (-t * y - y * y / 2.0).exp() * model.g_radial(y).unwrap_or(f64::NAN);
        let (rhs, _) = integrate(&f, 0.0, Y_MAX, &tight())?;
        identity_i.push(IdentityPoint::new(t, lhs, rhs));
    }

    let mut identity_ii = Vec::new();
    for &x in x_values {
        let lhs = model.g((2.0 * x).sqrt()) / x;
        identity_ii.push(IdentityPoint::new(x, lhs, outer_transform(atoms, x)?));
    }

    let mut identity_iii = Vec::new();
    for p in Prefactor::ALL {
        let mut points = Vec::new();
        for &t in t_values {
            let rhs = scaled_tail(&model, t)?;
            // h recovered from the outer transform through the candidate prefactor
            let f = |y: f64| {
                let x = y * y / 2.0;
                (-t * y).exp() * outer_transform(atoms, x).unwrap_or(f64::NAN) / p.eval(x)
            };
            let (lhs, _) = integrate(&f, 0.0, Y_MAX, &tight())?;
            points.push(IdentityPoint::new(t, lhs, rhs));
        }
        let max_residual = max_rel(&points);
        identity_iii.push(PrefactorTrial { prefactor: p, label: p.label(), points, max_residual });
    }
    let passing: Vec<Prefactor> = identity_iii
        .iter()
        .filter(|tr| tr.max_residual <= PREFACTOR_THRESHOLD)
        .map(|tr| tr.prefactor)
        .collect();
    let adjudicated = (passing.len() == 1).then(|| passing[0]);

    let weights = gs_weights(12);
    let outer = |x: f64| model.g((2.0 * x).sqrt()) / x;
    let outer_inversion = rho_values
        .iter()
        .map(|&rho| {
            let lhs = gaver_stehfest(&outer, rho * rho, &weights);
            IdentityPoint::new(rho, lhs, radon_from_atoms(atoms, rho))
        })
        .collect();

    Ok(LaplaceReport {
        max_residual_i: max_rel(&identity_i),
        max_residual_ii: max_rel(&identity_ii),
        identity_i,
        identity_ii,
        identity_iii,
        outer_inversion,
        adjudicated,
    })
}

#[derive(Debug, Clone)]
pub struct InversionConfig {
    /// Gaver–Stehfest order, even.
    pub order: usize,
    pub rho: Vec<f64>,
    pub prefactor: Prefactor,
    /// Largest tolerated order-comparison change before the inversion is
    /// declared unstable.
    pub max_change: f64,
}

impl InversionConfig {
    pub fn new(rho: Vec<f64>) -> Self {
        InversionConfig { order: 12, rho, prefactor: Prefactor::ExpOverX, max_change: 1.0 }
    }
}

/// `ln m` on the tail grid by a natural cubic spline, continued past the last
/// point by the fitted Gaussian decay.
struct TailInterpolator {
    t: Vec<f64>,
    y: Vec<f64>,
    d2: Vec<f64>,
    tail_fit: KappaEstimate,
    shift: f64,
}

impl TailInterpolator {
    fn new(tail: &TailGrid, fit: KappaEstimate) -> Result<Self> {
        let idx: Vec<usize> = (0..tail.len()).filter(|&i| tail.m[i] > 0.0).collect();
        if idx.len() < 4 {
            return Err(Error::Data("too few positive tail values to interpolate".into()));
        }
        let t: Vec<f64> = idx.iter().map(|&i| tail.t[i]).collect();
        let y: Vec<f64> = idx.iter().map(|&i| tail.m[i].ln()).collect();
        let n = t.len();
        // tridiagonal solve for second derivatives, natural ends
        let mut d2 = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut r = vec![0.0; n];
        for i in 1..n - 1 {
            let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
            c[i] = h1 / diag;
            r[i] = (rhs - h0 * r[i - 1]) / diag;
        }
        for i in (1..n - 1).rev() {
            d2[i] = r[i] - c[i] * d2[i + 1];
        }
        let last = t[n - 1];
        let shift = y[n - 1] - fit.ln_m(last);
        Ok(TailInterpolator { t, y, d2, tail_fit: fit, shift })
    }

    fn ln_m(&self, u: f64) -> f64 {
        let n = self.t.len();
        if u >= self.t[n - 1] {
            return self.tail_fit.ln_m(u) + self.shift;
        }
        if u <= self.t[0] {
            let slope = (self.y[1] - self.y[0]) / (self.t[1] - self.t[0]);
            return (self.y[0] + slope * (u - self.t[0])).min(0.0);
        }
        let k = self.t.partition_point(|&x| x <= u).min(n - 1);
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let h = t1 - t0;
        let (a, b) = ((t1 - u) / h, (u - t0) / h);
        a * self.y[k - 1] + b * self.y[k] + ((a * a * a - a) * self.d2[k - 1] + (b * b * b - b) * self.d2[k]) * h * h / 6.0
    }
}

/// Double inversion without the stability verdict; the profile carries the
/// order-comparison error per point.
pub fn radon_from_tail_unchecked(tail: &TailGrid, kappa: f64, cfg: &InversionConfig) -> Result<RadonProfile<f64>> {
    if !tail.is_noiseless() {
        return Err(Error::EmpiricalTailRejected);
    }
    if !(kappa > 0.0) {
        return Err(Error::InconsistentInput(format!("kappa must be positive, got {kappa}")));
    }
    if cfg.order < 4 || cfg.order % 2 != 0 {
        return Err(Error::InconsistentInput(format!("Gaver–Stehfest order must be even and at least 4, got {}", cfg.order)));
    }
    let interp = Arc::new(TailInterpolator::new(tail, estimate_kappa(tail)?)?);
    let invert = |order: usize, rho: f64| -> f64 {
        let w = gs_weights(order);
        let f1 = |u: f64| TAU.powf(1.5) * (u * u / 2.0 + interp.ln_m(u / kappa)).exp();
        let h = |y: f64| gaver_stehfest(&f1, y, &w);
        let f2 = |x: f64| cfg.prefactor.eval(x) * h((2.0 * x).sqrt());
        gaver_stehfest(&f2, rho * rho, &w)
    };
    let mut values = Vec::with_capacity(cfg.rho.len());
    let mut errors = Vec::with_capacity(cfg.rho.len());
    for &rho in &cfg.rho {
        let hi = invert(cfg.order, rho);
        let lo = invert(cfg.order - 2, rho);
        values.push(hi);
        errors.push((hi - lo).abs());
    }
    // non-finite values are reported through the errors, not as a profile
    if values.iter().chain(&errors).any(|v| !v.is_finite()) {
        let k = values.iter().zip(&errors).position(|(v, e)| !v.is_finite() || !e.is_finite()).unwrap();
        return Err(Error::InversionUnstable { max_change: f64::INFINITY, rho: cfg.rho[k] });
    }
    RadonProfile::new(cfg.rho.clone(), values)?.with_errors(errors)
}

/// `R_T` from the tail by two Gaver–Stehfest inversions.
pub fn radon_from_tail(tail: &TailGrid, kappa: f64, cfg: &InversionConfig) -> Result<RadonProfile<f64>> {
    let p = radon_from_tail_unchecked(tail, kappa, cfg)?;
    let errs = p.errors.as_ref().unwrap();
    let (k, worst) = errs.iter().enumerate().fold((0, 0.0), |b, (i, &e)| if e > b.1 { (i, e) } else { b });
    if worst > cfg.max_change {
        return Err(Error::InversionUnstable { max_change: worst, rho: p.rho[k] });
    }
    Ok(p)
}
