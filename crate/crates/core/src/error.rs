use core::fmt;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix or vector of dimension zero was supplied.
    EmptyDimension,
    /// Two objects that must agree in size do not.
    DimensionMismatch { expected: usize, got: usize },
    /// A dimension exceeds what the routine supports.
    TooLarge { limit: usize, got: usize },
    /// A NaN or infinity appeared where a finite value is required.
    NonFinite(&'static str),
    /// Matrix entries `(i, j)` and `(j, i)` differ beyond tolerance.
    NotSymmetric { row: usize, col: usize },
    /// Cyclic Jacobi did not reach the off-diagonal tolerance.
    NoConvergence { sweeps: usize },
    /// A matrix expected to be positive semi-definite has a negative eigenvalue.
    Indefinite { min: f64, max: f64 },
    /// An argument is outside the domain of the function.
    Domain(&'static str),
    /// A quantity that must be nonzero (norm, seminorm, loss) vanished.
    Degenerate(&'static str),
    /// An invalid configuration value.
    InvalidParameter(&'static str),
    /// The loss increased between consecutive integration steps.
    LossIncreased { step: usize, before: f64, after: f64 },
    /// A trajectory did not meet its stopping criterion.
    NotConverged,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyDimension => write!(f, "dimension must be positive"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::TooLarge { limit, got } => write!(f, "dimension {got} exceeds limit {limit}"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::NotSymmetric { row, col } => {
                write!(f, "matrix is not symmetric at ({row}, {col})")
            }
            Error::NoConvergence { sweeps } => {
                write!(f, "Jacobi eigensolver did not converge after {sweeps} sweeps")
            }
            Error::Indefinite { min, max } => {
                write!(f, "matrix is indefinite: lambda_min = {min:e}, lambda_max = {max:e}")
            }
            Error::Domain(what) => write!(f, "argument out of domain: {what}"),
            Error::Degenerate(what) => write!(f, "degenerate input: {what}"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::LossIncreased { step, before, after } => write!(
                f,
                "loss increased at step {step} ({before:e} -> {after:e}); step size too large"
            ),
            Error::NotConverged => write!(f, "trajectory halted before reaching its stop loss"),
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

impl core::error::Error for Error {}
