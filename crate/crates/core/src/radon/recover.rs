use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Triangle2D;
use crate::radon::atoms::AtomSet;
use crate::radon::breakpoints::{detect_breakpoints_with, BreakpointOptions};
use crate::radon::exact::radon_exact;
use crate::radon::fit::{fit_atoms_with, FitOptions};
use crate::radon::parametric::{pairs_to_parametric, triangle_from_parametric, ParametricForm};
use crate::radon::profile::RadonProfile;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct RecoverOptions<T> {
    pub breakpoints: BreakpointOptions<T>,
    pub fit: FitOptions<T>,
    /// Largest accepted sup-norm misfit between the recovered triangle's
    /// transform and the profile.
    pub sup_tolerance: T,
}

impl<T: Scalar> Default for RecoverOptions<T> {
    fn default() -> Self {
        RecoverOptions { breakpoints: BreakpointOptions::default(), fit: FitOptions::default(), sup_tolerance: T::lit(1e-6) }
    }
}

#[derive(Debug, Clone)]
pub struct TriangleRecovery<T> {
    pub triangle: Triangle2D<T>,
    pub parametric: ParametricForm<T>,
    pub atoms: AtomSet<T>,
    pub breakpoints: Vec<T>,
    pub fit_residual: T,
    pub sup_error: T,
    pub ambiguous: bool,
    pub condition_number: T,
}

/// Serializable summary of a recovery.
#[derive(Debug, Clone, Serialize)]
pub struct TriangleRecoverySummary {
    pub parametric: [f64; 6],
    pub case: String,
    pub breakpoints: Vec<f64>,
    pub fit_residual: f64,
    pub sup_error: f64,
    pub ambiguous: bool,
    pub condition_number: f64,
}

impl<T: Scalar> TriangleRecovery<T> {
    pub fn summary(&self) -> TriangleRecoverySummary {
        TriangleRecoverySummary {
            parametric: self.parametric.values.map(|v| v.as_f64()),
            case: self.parametric.case.label().to_string(),
            breakpoints: self.breakpoints.iter().map(|v| v.as_f64()).collect(),
            fit_residual: self.fit_residual.as_f64(),
            sup_error: self.sup_error.as_f64(),
            ambiguous: self.ambiguous,
            condition_number: self.condition_number.as_f64(),
        }
    }
}

/// Triangle (up to an orthogonal map) whose transform is the profile.
pub fn recover_triangle<T: Scalar>(profile: &RadonProfile<T>) -> Result<TriangleRecovery<T>> {
    recover_triangle_with(profile, &RecoverOptions::default())
}

pub fn recover_triangle_with<T: Scalar>(profile: &RadonProfile<T>, opts: &RecoverOptions<T>) -> Result<TriangleRecovery<T>> {
    let breakpoints = detect_breakpoints_with(profile, &opts.breakpoints)?;
    let fit = fit_atoms_with(profile, &breakpoints, &opts.fit)?;
    let parametric = pairs_to_parametric(&fit.atoms)?;
    let triangle = triangle_from_parametric(&parametric)?;
    let sup_error = profile.sup_distance(|r| radon_exact(&triangle, r));
    if !(sup_error <= opts.sup_tolerance) {
        return Err(Error::NotATriangleTransform { best_residual: sup_error.as_f64() });
    }
    Ok(TriangleRecovery {
        triangle,
        parametric,
        atoms: fit.atoms,
        breakpoints,
        fit_residual: fit.residual,
        sup_error,
        ambiguous: fit.ambiguous,
        condition_number: fit.condition_number,
    })
}
