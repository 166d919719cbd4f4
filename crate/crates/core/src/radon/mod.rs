//! Circular transforms of planar triangles and their inversion.
//!
//! `R_T(ρ)` is the angular measure of the circle of radius `ρ` inside `T`.
//! For a triangle enclosing the origin it is a signed sum of at most six atoms
//! `Φ_{a,b}`, the transforms of right triangles with legs along a foot of
//! perpendicular, and the atom radii are exactly the kinks of the profile.

pub mod atoms;
pub mod breakpoints;
pub mod exact;
pub mod fit;
pub mod parametric;
pub mod profile;
pub mod recover;

pub use atoms::{basic_triangle, classify_case, decompose_atoms, heights, phi, radon_from_atoms, Atom, AtomSet, Foot, TriangleCase};
pub use breakpoints::{detect_breakpoints, detect_breakpoints_with, BreakpointOptions};
pub use exact::{counterexample_pair, radon_exact};
pub use fit::{fit_atoms, fit_atoms_with, AtomFit, FitOptions};
pub use parametric::{pairs_to_parametric, parametric_form, triangle_from_parametric, ParametricForm};
pub use profile::{Evaluator, RadonProfile, DEFAULT_RHO_POINTS};
pub use recover::{recover_triangle, recover_triangle_with, RecoverOptions, TriangleRecovery, TriangleRecoverySummary};
