use std::f64::consts::{PI, TAU};

use owens_t::owens_t;

use crate::covariance::{kappa, section_triangle, standard_square_root, CovarianceMatrix3};
use crate::error::{Error, Result};
use crate::geometry::Triangle2D;
use crate::quadrature::{integrate, integrate_breaks, kronrod_nodes, QuadOptions};
use crate::radon::atoms::{decompose_atoms, radon_from_atoms, AtomSet};
use crate::tail::{TailGrid, TailSource};

/// Truncation of the Gaussian factor, in standard deviations.
const TRUNCATION: f64 = 12.0;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Forward model of one admissible covariance: section triangle and `κ`.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    pub kappa: f64,
    pub triangle: Triangle2D<f64>,
    pub atoms: AtomSet<f64>,
    // (a, λ = √(b²−a²)/a, c) per atom
    wedges: Vec<(f64, f64, f64)>,
}

impl ForwardModel {
    pub fn from_sigma(sigma: &CovarianceMatrix3<f64>) -> Result<Self> {
        let root = standard_square_root(sigma)?;
        let sec = section_triangle(&root)?;
        Self::from_section(&sec.triangle, kappa(sigma)?)
    }

    pub fn from_section(triangle: &Triangle2D<f64>, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InconsistentInput(format!("kappa must be positive, got {kappa}")));
        }
        let atoms = decompose_atoms(triangle)?;
        let wedges = atoms
            .atoms
            .iter()
            .map(|at| (at.a, (at.b * at.b - at.a * at.a).max(0.0).sqrt() / at.a, at.c as f64))
            .collect();
        Ok(ForwardModel { kappa, triangle: *triangle, atoms, wedges })
    }

    /// `G(x) = ∬_{xT} e^{-(y²+z²)/2}`, each atom's right triangle being a wedge
    /// minus an Owen's T tail.
    pub fn g(&self, x: f64) -> f64 {
        self.wedges
            .iter()
            .map(|&(a, lam, c)| c * (lam.atan() - TAU * owens_t(x * a, lam)))
            .sum()
    }

    /// `G` through its radial form `∫₀^∞ ρ e^{-ρ²/2} R_T(ρ/x) dρ`.
    pub fn g_radial(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        let mut breaks: Vec<f64> = vec![0.0];
        breaks.extend(self.atoms.atoms.iter().flat_map(|a| [a.a * x, a.b * x]).filter(|&r| r < TRUNCATION));
        breaks.push(TRUNCATION);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let f = |rho: f64| rho * (-rho * rho / 2.0).exp() * radon_from_atoms(&self.atoms, rho / x);
        integrate_breaks(&f, &breaks, &QuadOptions { rel_tol: 1e-12, ..Default::default() }).map(|r| r.0)
    }

    /// `m(t)` by adaptive quadrature.
    pub fn m(&self, t: f64) -> Result<f64> {
        let kt = self.kappa * t;
        let opts = QuadOptions::default();
        if kt >= 0.0 {
            // e^{-(x+κt)²/2} = e^{-κ²t²/2} e^{-x²/2 - κtx}
            let f = |x: f64| (-x * x / 2.0 - kt * x).exp() * self.g(x);
            let upper = TRUNCATION;
            let knee = (1.0 / kt.max(1.0)).min(upper);
            let (v, _) = integrate_breaks(&f, &[0.0, knee, upper], &opts)?;
            Ok((-kt * kt / 2.0).exp() * v * (TAU).powf(-1.5))
        } else {
            let f = |x: f64| (-(x + kt) * (x + kt) / 2.0).exp() * self.g(x);
            let (v, _) = integrate(&f, 0.0, -kt + TRUNCATION, &opts)?;
            Ok(v * (TAU).powf(-1.5))
        }
    }

    /// `m` on many points with one fixed panel rule; `G` is evaluated once per node.
    pub fn m_batch(&self, t: &[f64]) -> Vec<f64> {
        let t_min = t.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = (-self.kappa * t_min).max(0.0) + TRUNCATION;
        let mut breaks = vec![0.0, 0.003, 0.01, 0.03, 0.07, 0.15, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0];
        let mut x = 4.0;
        while x < upper {
            breaks.push(x);
            x += 1.0;
        }
        breaks.push(upper);
        let nodes: Vec<(f64, f64)> = breaks
            .windows(2)
            .flat_map(|w| kronrod_nodes(w[0], w[1]))
            .map(|(x, w)| (x, w * self.g(x)))
            .collect();
        let norm = (TAU).powf(-1.5);
        t.iter()
            .map(|&ti| {
                let kt = self.kappa * ti;
                let s: f64 = nodes.iter().map(|&(x, w)| w * (-(x + kt) * (x + kt) / 2.0).exp()).sum();
                s * norm
            })
            .collect()
    }
}

/// Tail of `Σ` on `t` by adaptive quadrature.
pub fn tail_from_sigma(sigma: &CovarianceMatrix3<f64>, t: &[f64]) -> Result<TailGrid> {
    let model = ForwardModel::from_sigma(sigma)?;
    let m = t.iter().map(|&x| model.m(x).map(|v| v.clamp(0.0, 1.0))).collect::<Result<Vec<_>>>()?;
    TailGrid::new(t.to_vec(), m, TailSource::Quadrature)
}

/// Equicorrelated orthant probability `P(X ≥ 0) = 1/8 + 3 asin(ρ)/(4π)`.
pub fn equicorrelated_orthant(rho: f64) -> f64 {
    0.125 + 3.0 * rho.asin() / (4.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::random_admissible;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_values() {
        let f = ForwardModel::from_sigma(&CovarianceMatrix3::identity()).unwrap();
        assert!((f.m(0.0).unwrap() - 0.125).abs() < 1e-12);
        let q: f64 = 1.0 - normal_cdf(1.0);
        assert!((f.m(1.0).unwrap() - q.powi(3)).abs() < 1e-13);
        assert!((q - 0.158_655_253_931_457_05).abs() < 1e-15);
    }

    #[test]
    fn equicorrelated_orthant_value() {
        let f = ForwardModel::from_sigma(&CovarianceMatrix3::equicorrelated(-0.25)).unwrap();
        let expect = equicorrelated_orthant(-0.25);
        assert!((expect - 0.064_677).abs() < 1e-6);
        assert!((f.m(0.0).unwrap() - expect).abs() < 1e-11);
    }

    #[test]
    fn diagonal_closed_form() {
        let d = [1.0, 4.0, 9.0];
        let f = ForwardModel::from_sigma(&CovarianceMatrix3::diagonal(d)).unwrap();
        for t in [-2.0, -0.5, 0.0, 0.7, 2.0, 4.0] {
            let expect: f64 = d.iter().map(|v: &f64| 1.0 - normal_cdf(t / v.sqrt())).product();
            assert!((f.m(t).unwrap() - expect).abs() < 1e-12 * expect.max(1e-3), "t = {t}");
        }
    }

    #[test]
    fn owen_and_radial_forms_agree() {
        let f = ForwardModel::from_sigma(&CovarianceMatrix3::new([[1.0, -0.2, -0.3], [-0.2, 1.0, -0.1], [-0.3, -0.1, 1.0]])).unwrap();
        for x in [0.1, 0.5, 1.0, 2.5, 6.0] {
            assert!((f.g(x) - f.g_radial(x).unwrap()).abs() < 1e-11, "x = {x}");
        }
        assert!((f.g(40.0) - TAU).abs() < 1e-12);
    }

    #[test]
    fn batch_rule_matches_adaptive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let f = ForwardModel::from_sigma(&random_admissible(&mut rng, 0.0)).unwrap();
            let ts = [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 4.0, 6.0];
            for (t, mb) in ts.iter().zip(f.m_batch(&ts)) {
                let ma = f.m(*t).unwrap();
                assert!((ma - mb).abs() <= 1e-10 * ma + 1e-300, "t = {t}: {ma} vs {mb}");
            }
        }
    }

    #[test]
    fn section_and_sigma_constructors_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = random_admissible(&mut rng, 0.0);
        let a = ForwardModel::from_sigma(&s).unwrap();
        let back = crate::covariance::sigma_from_section(&crate::covariance::SectionTriangle { triangle: a.triangle }, a.kappa).unwrap();
        let b = ForwardModel::from_sigma(&back).unwrap();
        let ts = [-1.0, 0.0, 1.5];
        for (x, y) in a.m_batch(&ts).iter().zip(b.m_batch(&ts)) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
