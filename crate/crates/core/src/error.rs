use thiserror::Error;

/// Errors raised by the reconstruction toolkit.
///
/// Variants split into two families: invalid input (`Invalid*`, `Misaligned`,
/// `LengthMismatch`, ...) and numerical failures (`NoConvergence`,
/// `RankDeficient`, ...). [`Error::is_numerical`] tells them apart, which the
/// CLI maps to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rectangle: {0}")]
    InvalidRect(String),

    #[error("grid spacing {h} does not divide the {axis} extent {extent}")]
    NonDivisibleSpacing { axis: &'static str, h: f64, extent: f64 },

    #[error("invalid grid spacing {0}: must be positive and finite")]
    InvalidSpacing(f64),

    #[error("Γ must be a nonempty open subset of the boundary")]
    EmptyGamma,

    #[error("Γ covers the whole boundary; the harmonic measure is identically 1")]
    DegenerateGamma,

    #[error("grid with {nx}x{ny} nodes is too small: {reason}")]
    GridTooSmall { nx: usize, ny: usize, reason: String },

    #[error("length mismatch: expected {expected}, got {actual} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("grids are not aligned: {0}")]
    Misaligned(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e}, target {target:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("base solution {index} failed: {source}")]
    BaseSolution {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("least-squares system is rank deficient (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("numerical failure: {message} (condition estimate {condition:.3e})")]
    Numerical { message: String, condition: f64 },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence { .. } | Error::RankDeficient { .. } | Error::Numerical { .. } => true,
            Error::BaseSolution { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
