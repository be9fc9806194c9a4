use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation needs the {expected} case but the curve is {actual}")]
    WrongCase { expected: &'static str, actual: &'static str },
    #[error("admissibility failure at {point}: {reason}")]
    Admissibility { point: String, reason: String },
    #[error("coincident singular points: {0}")]
    CoincidentPoints(String),
    #[error("eigenvalue with non-positive real part at {0}")]
    NonPositiveEigenvalue(String),
    #[error("quadrature did not converge on {label}: estimate {error:e} > target {target:e}")]
    NonConvergence { label: String, error: f64, target: f64 },
    #[error("tail bound could not be certified on {0}")]
    TailBound(String),
    #[error("ODE step size underflow near {0}")]
    StepUnderflow(String),
    #[error("branch tracking lost root identity: {0}")]
    BranchCollision(String),
    #[error("path construction: {0}")]
    Path(String),
    #[error("monodromy disk contains {0} singular points (expected at most one)")]
    MultipleSingularities(usize),
    #[error("extrapolation failed: {0}")]
    Extrapolation(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// Numerical failures map to exit code 2 in the CLI; everything else is
    /// a usage or input problem.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::TailBound(_)
                | Error::StepUnderflow(_)
                | Error::BranchCollision(_)
                | Error::Extrapolation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
