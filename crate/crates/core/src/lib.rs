//! Identification of a trivariate Gaussian covariance from the distribution of
//! the minimum of its coordinates.
//!
//! The pipeline runs `Σ ↦ (section triangle, κ) ↦ circular transform ↦ tail`
//! forward, and inverts it either by fitting the tail directly or by a
//! constructive double Laplace inversion.

pub mod covariance;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod radon;
pub mod recovery;
pub mod scalar;
pub mod tail;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Covariance = covariance::CovarianceMatrix3<f64>;
pub type Triangle = geometry::Triangle2D<f64>;
pub type Profile = radon::RadonProfile<f64>;
pub type Atoms = radon::AtomSet<f64>;
pub type Parametric = radon::ParametricForm<f64>;
