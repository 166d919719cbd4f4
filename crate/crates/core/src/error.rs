use thiserror::Error;

/// Errors raised by the library. Numeric payloads are widened to `f64`.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("covariance matrix is not admissible: {0}")]
    NotAdmissible(String),

    #[error("degenerate triangle: {0}")]
    DegenerateTriangle(String),

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid too coarse to separate breakpoints; minimal usable step is {min_step:.3e}")]
    Resolution { min_step: f64 },

    #[error("profile is not the transform of an enclosing triangle (best residual {best_residual:.3e})")]
    NotATriangleTransform { best_residual: f64 },

    #[error("malformed atom set: {0}")]
    MalformedAtoms(String),

    #[error("inconsistent parametric form: {0}")]
    InconsistentParametricForm(String),

    #[error("tail data error: {0}")]
    Data(String),

    #[error("quadrature did not converge on [{lower}, {upper}]: estimated error {error:.3e}")]
    Quadrature { lower: f64, upper: f64, error: f64 },

    #[error(
        "Laplace inversion unstable (order comparison {max_change:.3e} at rho = {rho:.4}); use the fit route"
    )]
    InversionUnstable { max_change: f64, rho: f64 },

    #[error("empirical tails cannot be inverted; use the fit route")]
    EmpiricalTailRejected,

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
