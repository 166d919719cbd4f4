use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Triangle2D;
use crate::radon::exact::radon_exact;
use crate::scalar::Scalar;

/// Default number of profile samples.
pub const DEFAULT_RHO_POINTS: usize = 2048;

/// Shared handle to an exact transform evaluator.
pub type Evaluator<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Sampled circular transform `ρ ↦ R(ρ)`.
#[derive(Clone)]
pub struct RadonProfile<T> {
    pub rho: Vec<T>,
    pub values: Vec<T>,
    /// Per-point error estimate, for profiles produced by numerical inversion.
    pub errors: Option<Vec<T>>,
    /// Exact evaluator, when the profile comes from a known triangle.
    pub exact: Option<Evaluator<T>>,
}

impl<T: fmt::Debug> fmt::Debug for RadonProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadonProfile")
            .field("points", &self.rho.len())
            .field("has_errors", &self.errors.is_some())
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl<T: Scalar> RadonProfile<T> {
    pub fn new(rho: Vec<T>, values: Vec<T>) -> Result<Self> {
        if rho.len() != values.len() {
            return Err(Error::InconsistentInput("rho and value columns differ in length".into()));
        }
        if rho.is_empty() {
            return Err(Error::InconsistentInput("empty profile".into()));
        }
        if rho.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InconsistentInput("non-finite profile entry".into()));
        }
        if !(rho[0] > T::zero()) || rho.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InconsistentInput("rho must be positive and strictly increasing".into()));
        }
        Ok(RadonProfile { rho, values, errors: None, exact: None })
    }

    pub fn with_errors(mut self, errors: Vec<T>) -> Result<Self> {
        if errors.len() != self.rho.len() {
            return Err(Error::InconsistentInput("error column length mismatch".into()));
        }
        self.errors = Some(errors);
        Ok(self)
    }

    pub fn with_exact(mut self, f: Evaluator<T>) -> Self {
        self.exact = Some(f);
        self
    }

    /// `n` uniform points `k·ρ_max/n`, `k = 1..=n`.
    pub fn uniform_grid(rho_max: T, n: usize) -> Vec<T> {
        let step = rho_max / T::from_usize(n).unwrap();
        (1..=n).map(|k| step * T::from_usize(k).unwrap()).collect()
    }

    pub fn sample(f: Evaluator<T>, rho: Vec<T>) -> Result<Self> {
        let values = rho.iter().map(|&r| f(r)).collect();
        Ok(Self::new(rho, values)?.with_exact(f))
    }

    /// Exact profile on `n` points of `(0, 1.05·max vertex distance]`.
    pub fn from_triangle(t: &Triangle2D<T>, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InconsistentInput("profile needs at least 8 points".into()));
        }
        let tri = *t;
        let grid = Self::uniform_grid(T::lit(1.05) * t.max_vertex_distance(), n);
        Self::sample(Arc::new(move |r| radon_exact(&tri, r)), grid)
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Largest grid step.
    pub fn max_step(&self) -> T {
        let mut h = self.rho[0];
        for w in self.rho.windows(2) {
            h = h.max(w[1] - w[0]);
        }
        h
    }

    /// `max_k |values_k − f(ρ_k)|`.
    pub fn sup_distance(&self, f: impl Fn(T) -> T) -> T {
        self.rho
            .iter()
            .zip(&self.values)
            .fold(T::zero(), |m, (&r, &v)| m.max((v - f(r)).abs()))
    }
}
