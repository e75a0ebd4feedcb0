//! Error type shared by the solver kernels.

use core::fmt;

/// Errors surfaced by the solver kernels.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A parameter violated its documented domain (`p >= 1`, `alpha >= 0`, ...).
    InvalidParameter(&'static str),
    /// A density passed to the sensitivity law was negative, which signals a
    /// positivity violation upstream.
    NegativeDensity(f64),
    /// Initial-data descriptors produced a negative sample.
    InvalidInitialData(&'static str),
    /// The Poisson solver did not reach its tolerance.
    SolverFailure { residual: f64, iterations: usize },
    /// An explicit step was requested beyond its stability bound.
    StabilityBound { dt: f64, limit: f64 },
    /// A transport step produced a negative value beyond rounding tolerance.
    PositivityLoss { field: &'static str, min_value: f64 },
    /// The CFL controller fell below the configured floor.
    DtCollapsed { dt: f64, floor: f64 },
    /// A time series was too short for the requested window.
    InsufficientData,
    /// A lemma-verification case failed its admissibility precondition.
    LemmaPrecondition { window_integral: f64, bound: f64 },
    /// The integrated trajectory exceeded a proven bound beyond quadrature
    /// tolerance; this indicates an implementation bug.
    LemmaViolation { excess: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::NegativeDensity(v) => write!(f, "negative density {v} passed to sensitivity"),
            Error::InvalidInitialData(what) => write!(f, "invalid initial data: {what}"),
            Error::SolverFailure {
                residual,
                iterations,
            } => write!(
                f,
                "Poisson solver failed to converge: residual {residual:.3e} after {iterations} iterations"
            ),
            Error::StabilityBound { dt, limit } => {
                write!(f, "dt {dt:.3e} exceeds explicit stability bound {limit:.3e}")
            }
            Error::PositivityLoss { field, min_value } => {
                write!(f, "positivity lost in {field}: min value {min_value:.3e}")
            }
            Error::DtCollapsed { dt, floor } => {
                write!(f, "time step collapsed: dt {dt:.3e} below floor {floor:.3e}")
            }
            Error::InsufficientData => write!(f, "time series shorter than one window"),
            Error::LemmaPrecondition {
                window_integral,
                bound,
            } => write!(
                f,
                "window integral {window_integral:.6e} exceeds admissible bound {bound:.6e}"
            ),
            Error::LemmaViolation { excess } => {
                write!(f, "proven bound exceeded by {excess:.3e} (implementation bug)")
            }
        }
    }
}

#[cfg(test)]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
