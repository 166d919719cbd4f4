//! From a tail of `X_min` back to `Σ`, up to a simultaneous permutation.
//!
//! The fit route matches the forward model to the tail over the precision
//! matrix `Σ⁻¹`. The constructive route inverts the Laplace chain and
//! reads the triangle off the recovered circular transform.

pub mod optimize;

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{
    kappa,
    permutation_distance, random_admissible, sigma_from_section,
    validate_admissible, CovarianceMatrix3, SectionTriangle,
};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Triangle2D};
use crate::linalg::Mat3;
use crate::radon::atoms::heights;
use crate::radon::breakpoints::BreakpointOptions;
use crate::radon::fit::FitOptions;
use crate::radon::parametric::parametric_form;
use crate::radon::recover::{recover_triangle_with, RecoverOptions, TriangleRecoverySummary};
use crate::radon::profile::RadonProfile;
use crate::tail::forward::{tail_from_sigma, ForwardModel};
use crate::tail::kappa::{estimate_kappa_with, KappaEstimate, KappaFitConfig};
use crate::tail::laplace::{radon_from_tail, InversionConfig};
use crate::tail::TailGrid;
use optimize::{levenberg_marquardt, LevenbergOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Fit,
    Constructive,
}

impl std::str::FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fit" => Ok(Route::Fit),
            "constructive" => Ok(Route::Constructive),
            other => Err(Error::Parse(format!("unknown route '{other}' (expected fit or constructive)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryConfig {
    pub route: Route,
    pub kappa: KappaFitConfig,
    /// Random admissible candidates scored once before the local searches.
    pub screen: usize,
    /// Local searches per batch, taken in order from the best screened candidates.
    pub multistart: usize,
    /// Batches tried before giving up on a well-fitting minimum.
    pub batches: usize,
    /// Levenberg–Marquardt iterations per local search.
    pub lm_iterations: usize,
    /// Normal-angle hops: rounds, grid cells per `π`, local searches per round.
    pub hop_rounds: usize,
    pub hop_grid: usize,
    pub hop_starts: usize,
    /// Accepted weighted sum of squares for noiseless tails.
    pub tolerance: f64,
    /// Accepted reduced χ² for empirical tails.
    pub chi2_tolerance: f64,
    pub seed: u64,
    /// Tail grid used when the tail is generated from `Σ`.
    pub t_min: f64,
    pub t_max: f64,
    pub grid_points: usize,
    /// Profile grid of the constructive route.
    pub rho_max: f64,
    pub rho_points: usize,
    pub gs_order: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            route: Route::Fit,
            kappa: KappaFitConfig::default(),
            screen: 2000,
            multistart: 6,
            batches: 8,
            lm_iterations: 100,
            hop_rounds: 2,
            hop_grid: 48,
            hop_starts: 6,
            tolerance: 1e-12,
            chi2_tolerance: 5.0,
            seed: 0,
            t_min: -2.0,
            t_max: 6.0,
            grid_points: 200,
            rho_max: 2.5,
            rho_points: 2048,
            gs_order: 12,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InconsistentInput(m.into()));
        if self.multistart == 0 || self.batches == 0 || self.lm_iterations == 0 || self.hop_grid < 4 {
            return bad("multistart count and iteration budget must be positive");
        }
        if !(self.tolerance > 0.0 && self.chi2_tolerance > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.t_max > self.t_min) || self.grid_points < 8 {
            return bad("tail grid needs t_max > t_min and at least 8 points");
        }
        if !(self.rho_max > 0.0) || self.rho_points < 8 || self.gs_order < 4 || self.gs_order % 2 != 0 {
            return bad("profile grid needs rho_max > 0, 8 points, and an even Gaver–Stehfest order >= 4");
        }
        Ok(())
    }

    pub fn t_grid(&self) -> Vec<f64> {
        TailGrid::uniform(self.t_min, self.t_max, self.grid_points)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TriangleSummary {
    pub vertices: [[f64; 2]; 3],
    pub parametric: Option<[f64; 6]>,
    pub case: Option<String>,
}

impl TriangleSummary {
    pub fn new(t: &Triangle2D<f64>) -> Self {
        let pf = parametric_form(t).ok();
        TriangleSummary {
            vertices: t.to_arrays(),
            parametric: pf.as_ref().map(|p| p.values),
            case: pf.map(|p| p.case.label().to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StartReport {
    pub index: usize,
    pub objective: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    pub success: bool,
    pub message: String,
    pub experimental: bool,
    pub kappa_estimate: Option<KappaEstimate>,
    pub fitted_points: Option<usize>,
    pub reduced_chi2: Option<f64>,
    pub starts: Vec<StartReport>,
    pub best_start: Option<usize>,
    pub evaluations: usize,
    pub inversion_max_error: Option<f64>,
    pub triangle_recovery: Option<TriangleRecoverySummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub sigma_hat: Option<[[f64; 3]; 3]>,
    pub kappa_hat: Option<f64>,
    pub triangle: Option<TriangleSummary>,
    pub residual: Option<f64>,
    pub route: Route,
    pub distance_to_truth: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl RecoveryReport {
    pub fn success(&self) -> bool {
        self.diagnostics.success
    }

    pub fn sigma(&self) -> Option<CovarianceMatrix3<f64>> {
        self.sigma_hat.map(CovarianceMatrix3::new)
    }

    fn failed(route: Route, message: String, kappa: Option<KappaEstimate>) -> Self {
        RecoveryReport {
            sigma_hat: None,
            kappa_hat: kappa.as_ref().map(|k| k.kappa),
            triangle: None,
            residual: None,
            route,
            distance_to_truth: None,
            diagnostics: Diagnostics { message, experimental: route == Route::Constructive, kappa_estimate: kappa, ..Default::default() },
        }
    }

    /// Attaches the permutation distance to `truth`.
    pub fn with_truth(mut self, truth: &CovarianceMatrix3<f64>) -> Self {
        self.distance_to_truth = self.sigma().map(|s| permutation_distance(truth, &s).distance);
        self
    }
}

/// Fit parameters: with `Q = Σ⁻¹` and `w = Q𝟏`, the logs of `w` followed by the
/// off-diagonal entries `q₁₂, q₁₃, q₂₃`. Admissibility is `w > 0` plus
/// positive definiteness, and `κ² = Σ wᵢ`.
const DIM: usize = 6;

fn decode(p: &[f64]) -> Option<CovarianceMatrix3<f64>> {
    let w = [p[0].exp(), p[1].exp(), p[2].exp()];
    let (q12, q13, q23) = (p[3], p[4], p[5]);
    let q = Mat3([[w[0] - q12 - q13, q12, q13], [q12, w[1] - q12 - q23, q23], [q13, q23, w[2] - q13 - q23]]);
    let sigma = CovarianceMatrix3::new(q.inverse()?.0);
    (sigma.rows().iter().flatten().all(|v: &f64| v.is_finite()) && validate_admissible(&sigma).admissible).then_some(sigma)
}

fn encode(sigma: &CovarianceMatrix3<f64>) -> Option<[f64; DIM]> {
    let q = Mat3(sigma.rows()).inverse()?.0;
    let w: [f64; 3] = std::array::from_fn(|i| q[i].iter().sum());
    let p = [w[0].ln(), w[1].ln(), w[2].ln(), q[0][1], q[0][2], q[1][2]];
    p.iter().all(|v| v.is_finite()).then_some(p)
}

struct Objective<'a> {
    t: Vec<f64>,
    m: Vec<f64>,
    w: Vec<f64>,
    _tail: &'a TailGrid,
}

impl Objective<'_> {
    fn new(tail: &TailGrid) -> Result<Objective<'_>> {
        let mut t = Vec::new();
        let mut m = Vec::new();
        let mut w = Vec::new();
        for i in 0..tail.len() {
            let mi = tail.m[i];
            if !(mi > 1e-100 && mi < 1.0 - 1e-6) {
                continue;
            }
            let wi = match &tail.stderr {
                Some(se) if se[i] > 0.0 => 1.0 / se[i],
                Some(_) => continue,
                None => 0.0,
            };
            t.push(tail.t[i]);
            m.push(mi);
            w.push(wi);
        }
        if t.len() < 2 * DIM {
            return Err(Error::Data(format!("only {} tail points with m in (1e-100, 1-1e-6); need {}", t.len(), 2 * DIM)));
        }
        Ok(Objective { t, m, w, _tail: tail })
    }

    fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
        let model = ForwardModel::from_sigma(&decode(p)?).ok()?;
        let out: Vec<f64> = model
            .m_batch(&self.t)
            .iter()
            .zip(&self.m)
            .zip(&self.w)
            .map(|((a, b), w)| {
                if *w > 0.0 {
                    w * (a - b)
                } else if *b < 0.5 {
                    a.ln() - b.ln()
                } else {
                    (1.0 - a).ln() - (1.0 - b).ln()
                }
            })
            .collect();
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    fn value(&self, p: &[f64]) -> f64 {
        match self.residuals(p) {
            Some(r) => r.iter().map(|v| v * v).sum(),
            None => f64::INFINITY,
        }
    }
}

/// Start 0 is the multiple of `I₃` with the estimated `κ`; the others are
/// random admissible matrices rescaled to that `κ`.
fn start_point(index: usize, seed: u64, kappa_hat: f64) -> [f64; DIM] {
    if index == 0 {
        let v = (kappa_hat * kappa_hat / 3.0).ln();
        return [v, v, v, 0.0, 0.0, 0.0];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    loop {
        let s = random_admissible(&mut rng, 0.0);
        let Ok(k) = kappa(&s) else { continue };
        if let Some(p) = encode(&s.scaled((k / kappa_hat).powi(2))) {
            return p;
        }
    }
}

/// Triangle `{p : nᵢ·p ≤ hᵢ}` whose unit normals sit at angles `0, g₀, g₀+g₁`.
fn support_triangle(h: [f64; 3], g0: f64, g1: f64) -> Option<Triangle2D<f64>> {
    if !(g0 < PI && g1 < PI && g0 + g1 > PI) {
        return None;
    }
    let ang = [0.0, g0, g0 + g1];
    let pts = std::array::from_fn(|i| {
        let j = (i + 1) % 3;
        let det = (ang[j] - ang[i]).sin();
        Point2::new(
            (h[i] * ang[j].sin() - h[j] * ang[i].sin()) / det,
            (h[j] * ang[i].cos() - h[i] * ang[j].cos()) / det,
        )
    });
    Triangle2D::new(pts).ok().filter(|t| t.is_enclosing())
}

/// Side heights in the counterclockwise order of their normals.
fn support_heights(t: &Triangle2D<f64>) -> [f64; 3] {
    let mut f: Vec<(f64, f64)> = heights(t).iter().map(|f| (f.point.y.atan2(f.point.x), f.distance)).collect();
    f.sort_by(|a, b| a.0.total_cmp(&b.0));
    [f[0].1, f[1].1, f[2].1]
}

/// Minima of one tail fit that keep `κ` and the side heights but misplace the
/// side normals are common. From `x`, freeze `κ` and the heights, scan the two
/// free normal angles on a grid, refine the most promising cells in those two
/// angles alone, and return the best `count` refined points.
fn hop_candidates(obj: &Objective, x: &[f64], grid: usize, count: usize) -> Vec<[f64; DIM]> {
    let Some(model) = decode(x).and_then(|s| ForwardModel::from_sigma(&s).ok()) else {
        return Vec::new();
    };
    let h = support_heights(&model.triangle);
    let lift = |g: &[f64]| -> Option<[f64; DIM]> {
        let tri = support_triangle(h, g[0], g[1])?;
        encode(&sigma_from_section(&SectionTriangle { triangle: tri }, model.kappa).ok()?)
    };
    let step = PI / grid as f64;
    let cells: Vec<(usize, usize)> =
        (1..grid).flat_map(|i| (1..grid).map(move |j| (i, j))).filter(|(i, j)| i + j > grid).collect();
    let values: std::collections::HashMap<(usize, usize), f64> = cells
        .par_iter()
        .filter_map(|&(i, j)| Some(((i, j), obj.value(&lift(&[i as f64 * step, j as f64 * step])?))))
        .filter(|c| c.1.is_finite())
        .collect();
    // cells no worse than any of their eight neighbours
    let mut seeds: Vec<(f64, (usize, usize))> = values
        .iter()
        .filter(|(&(i, j), &v)| {
            (-1i64..=1).flat_map(|a| (-1i64..=1).map(move |b| (a, b))).all(|(a, b)| {
                let key = ((i as i64 + a) as usize, (j as i64 + b) as usize);
                values.get(&key).is_none_or(|&w| w >= v)
            })
        })
        .map(|(&c, &v)| (v, c))
        .collect();
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let seeds: Vec<(usize, usize)> = seeds.into_iter().map(|s| s.1).collect();
    let angle_lm = LevenbergOptions { max_iterations: 20, ..Default::default() };
    let mut refined: Vec<(f64, usize, [f64; DIM])> = seeds
        .par_iter()
        .enumerate()
        .filter_map(|(k, &(i, j))| {
            let m = levenberg_marquardt(&|g| obj.residuals(&lift(g)?), &[i as f64 * step, j as f64 * step], &angle_lm);
            Some((m.f, k, lift(&m.x)?))
        })
        .collect();
    refined.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<[f64; DIM]> = Vec::new();
    for (_, _, p) in refined {
        if out.len() == count {
            break;
        }
        if out.iter().all(|q| q.iter().zip(&p).any(|(a, b)| (a - b).abs() > 1e-4)) {
            out.push(p);
        }
    }
    out
}

type Run = (usize, Vec<f64>, f64, usize, bool);

/// Fit route: screened random starts polished by Levenberg–Marquardt, then
/// rounds of normal-angle hops from the best minimum.
pub fn recover_sigma_fit(tail: &TailGrid, config: &RecoveryConfig) -> Result<RecoveryReport> {
    config.validate()?;
    let kest = match estimate_kappa_with(tail, &config.kappa) {
        Ok(k) => k,
        Err(e) => return Ok(RecoveryReport::failed(Route::Fit, format!("kappa estimation failed: {e}"), None)),
    };
    let obj = Objective::new(tail)?;
    let lm = LevenbergOptions { max_iterations: config.lm_iterations, ..Default::default() };
    let local = |i: usize, x0: &[f64]| -> Run {
        let m = levenberg_marquardt(&|p| obj.residuals(p), x0, &lm);
        (i, m.x, m.f, m.evaluations, m.converged)
    };
    let mut screened: Vec<(usize, f64)> = (0..config.screen.max(config.multistart))
        .into_par_iter()
        .map(|i| (i, obj.value(&start_point(i, config.seed, kest.kappa))))
        .collect();
    screened.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    // good enough to skip further batches and hops
    let settled = if tail.is_noiseless() {
        config.tolerance * 1e-8
    } else {
        config.chi2_tolerance * (obj.t.len() - DIM) as f64
    };
    let best_of = |runs: &[Run]| -> f64 { runs.iter().map(|r| r.2).fold(f64::INFINITY, f64::min) };
    let mut runs: Vec<Run> = Vec::new();
    let mut next = screened.len();
    for batch in screened.chunks(config.multistart).take(config.batches) {
        runs.par_extend(batch.par_iter().map(|&(i, _)| local(i, &start_point(i, config.seed, kest.kappa))));
        for _ in 0..config.hop_rounds {
            if best_of(&runs) <= settled {
                break;
            }
            let best = runs.iter().filter(|r| r.2.is_finite()).min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));
            let Some(best) = best else {
                break;
            };
            let hops = hop_candidates(&obj, &best.1, config.hop_grid, config.hop_starts);
            let found: Vec<Run> = hops.par_iter().enumerate().map(|(k, x0)| local(next + k, x0)).collect();
            next += hops.len();
            runs.extend(found);
        }
        if best_of(&runs) <= settled {
            break;
        }
    }
    let starts: Vec<StartReport> = runs
        .iter()
        .map(|(i, _, f, e, c)| StartReport { index: *i, objective: *f, evaluations: *e, converged: *c })
        .collect();
    let evaluations = starts.iter().map(|s| s.evaluations).sum();
    // lowest objective, ties to the lowest start index
    let best = runs.iter().fold(None::<&Run>, |b, r| match b {
        Some(b) if !(r.2 < b.2) => Some(b),
        _ => Some(r),
    });
    let mut diag = Diagnostics {
        kappa_estimate: Some(kest.clone()),
        fitted_points: Some(obj.t.len()),
        starts,
        evaluations,
        ..Default::default()
    };
    let Some((bi, bx, bf, _, _)) = best.filter(|b| b.2.is_finite()) else {
        diag.message = "every start left the admissible region".into();
        return Ok(RecoveryReport {
            sigma_hat: None,
            kappa_hat: Some(kest.kappa),
            triangle: None,
            residual: None,
            route: Route::Fit,
            distance_to_truth: None,
            diagnostics: diag,
        });
    };
    let sigma = decode(bx).expect("finite objective implies a decodable point");
    let model = ForwardModel::from_sigma(&sigma)?;
    let admissible = validate_admissible(&sigma).admissible;
    diag.best_start = Some(*bi);
    let dof = (obj.t.len() - DIM) as f64;
    let accepted = if tail.is_noiseless() {
        *bf <= config.tolerance
    } else {
        let chi2 = bf / dof;
        diag.reduced_chi2 = Some(chi2);
        chi2 <= config.chi2_tolerance
    };
    diag.success = accepted && admissible;
    diag.message = if diag.success {
        "converged".into()
    } else if !admissible {
        "best candidate is not admissible".into()
    } else {
        format!("objective {bf:.3e} above tolerance after {} starts", config.multistart)
    };
    Ok(RecoveryReport {
        sigma_hat: Some(sigma.rows()),
        kappa_hat: Some(model.kappa),
        triangle: Some(TriangleSummary::new(&model.triangle)),
        residual: Some(*bf),
        route: Route::Fit,
        distance_to_truth: None,
        diagnostics: diag,
    })
}

/// Constructive route: double Laplace inversion, then triangle recovery from
/// the profile. Experimental.
pub fn recover_sigma_constructive(tail: &TailGrid, config: &RecoveryConfig) -> Result<RecoveryReport> {
    config.validate()?;
    if !tail.is_noiseless() {
        return Err(Error::EmpiricalTailRejected);
    }
    let kest = match estimate_kappa_with(tail, &config.kappa) {
        Ok(k) => k,
        Err(e) => return Ok(RecoveryReport::failed(Route::Constructive, format!("kappa estimation failed: {e}"), None)),
    };
    let mut inv = InversionConfig::new(RadonProfile::<f64>::uniform_grid(config.rho_max, config.rho_points));
    inv.order = config.gs_order;
    let profile = match radon_from_tail(tail, kest.kappa, &inv) {
        Ok(p) => p,
        Err(e @ Error::InversionUnstable { .. }) => {
            return Ok(RecoveryReport::failed(Route::Constructive, e.to_string(), Some(kest)));
        }
        Err(e) => return Err(e),
    };
    let max_err = profile.errors.as_ref().map(|e| e.iter().copied().fold(0.0, f64::max)).unwrap_or(0.0);
    let n = profile.len() as f64;
    let opts = RecoverOptions {
        breakpoints: BreakpointOptions {
            use_exact: false,
            noise: Some(max_err),
            min_relative_spike: 0.05,
            ..Default::default()
        },
        fit: FitOptions { eps_fit_per_point: (1e-6f64).max(max_err * max_err), coefficient_tolerance: 0.3 },
        sup_tolerance: (1e-6f64).max(3.0 * max_err),
    };
    let mut report = RecoveryReport::failed(Route::Constructive, String::new(), Some(kest.clone()));
    report.diagnostics.inversion_max_error = Some(max_err);
    match recover_triangle_with(&profile, &opts) {
        Ok(rec) => {
            let sigma = sigma_from_section(&SectionTriangle { triangle: rec.triangle }, kest.kappa)?;
            report.sigma_hat = Some(sigma.rows());
            report.triangle = Some(TriangleSummary::new(&rec.triangle));
            report.residual = Some(rec.fit_residual / n);
            report.diagnostics.success = validate_admissible(&sigma).admissible;
            report.diagnostics.message = "triangle recovered from inverted profile".into();
            report.diagnostics.triangle_recovery = Some(rec.summary());
        }
        Err(e) => report.diagnostics.message = format!("triangle recovery failed: {e}"),
    }
    Ok(report)
}

pub fn recover_sigma(tail: &TailGrid, config: &RecoveryConfig) -> Result<RecoveryReport> {
    match config.route {
        Route::Fit => recover_sigma_fit(tail, config),
        Route::Constructive => recover_sigma_constructive(tail, config),
    }
}

/// Tail of `Σ` on the configured grid, the configured route, and the distance
/// of the result to `Σ`.
pub fn roundtrip_report(sigma: &CovarianceMatrix3<f64>, config: &RecoveryConfig) -> Result<RecoveryReport> {
    config.validate()?;
    let tail = tail_from_sigma(sigma, &config.t_grid())?;
    Ok(recover_sigma(&tail, config)?.with_truth(sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_round_trip() {
        let s = CovarianceMatrix3::new([[2.0, -0.3, 0.1], [-0.3, 1.0, -0.4], [0.1, -0.4, 1.5]]);
        let back = decode(&encode(&s).unwrap()).unwrap();
        assert!(permutation_distance(&s, &back).distance < 1e-14);
    }

    #[test]
    fn identity_round_trip_by_fit() {
        let rep = roundtrip_report(&CovarianceMatrix3::identity(), &RecoveryConfig::default()).unwrap();
        assert!(rep.success(), "{:?}", rep.diagnostics);
        assert!(rep.distance_to_truth.unwrap() <= 1e-3, "{:?}", rep.distance_to_truth);
    }

    #[test]
    fn support_chart_rebuilds_the_section() {
        let tri = ForwardModel::from_sigma(&CovarianceMatrix3::new([[2.0, -0.3, 0.1], [-0.3, 1.0, -0.4], [0.1, -0.4, 1.5]]))
            .unwrap()
            .triangle;
        let mut normals: Vec<f64> = heights(&tri).iter().map(|f| f.point.y.atan2(f.point.x)).collect();
        normals.sort_by(f64::total_cmp);
        let back = support_triangle(support_heights(&tri), normals[1] - normals[0], normals[2] - normals[1]).unwrap();
        let (a, b) = (parametric_form(&tri).unwrap(), parametric_form(&back).unwrap());
        assert!(a.distance(&b) < 1e-12, "{a:?} {b:?}");
    }

    #[test]
    fn route_names() {
        assert_eq!("fit".parse::<Route>().unwrap(), Route::Fit);
        assert!("other".parse::<Route>().is_err());
    }
}
