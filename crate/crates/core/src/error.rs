use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("basis did not converge up to dimension {dim} (relative residual {residual:e})")]
    BasisNotConverged { dim: usize, residual: f64 },

    #[error("Fourier truncation reached the cap K = {cap} with mode tail {tail:e}")]
    TruncationCap { cap: usize, tail: f64 },

    #[error("integrator failed at t = {t} ns (step {step:e} ns, defect {defect:e})")]
    Integrator { t: f64, step: f64, defect: f64 },

    #[error("quasi-energies are degenerate (eps01 = {eps01:e} rad/ns); rate formulas need a resolved gap")]
    Degenerate { eps01: f64 },

    #[error("1/f spectrum is singular at zero frequency")]
    ZeroFrequency,

    #[error("quasi-energy gap closes along the ramp near A = {amp:e} rad/ns")]
    GapClosure { amp: f64 },

    #[error("drive path leaves the sweet manifold (|g0phi| = {residual:e})")]
    OffManifold { residual: f64 },

    #[error("root search failed: {0}")]
    NoRoot(String),
}

/// Coarse classification used by callers that map errors to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validity,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_)
            | Error::Degenerate { .. }
            | Error::ZeroFrequency
            | Error::GapClosure { .. }
            | Error::OffManifold { .. } => ErrorKind::Validity,
            Error::BasisNotConverged { .. }
            | Error::TruncationCap { .. }
            | Error::Integrator { .. }
            | Error::NoRoot(_) => ErrorKind::Numerical,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
