use thiserror::Error;

/// Failures reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("pole of the Gamma function at {0}")]
    Pole(f64),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("degree {n} exceeds the cap {cap} for this evaluator")]
    CapExceeded { n: usize, cap: usize },
    #[error("precision loss: condition estimate {condition:.3e} exceeds {limit:.1e}")]
    PrecisionLoss { condition: f64, limit: f64 },
    #[error("imaginary residual {residual:.3e} of a contour integral exceeds threshold")]
    SymmetryViolation { residual: f64 },
    #[error("result {0} is outside the double range")]
    Overflow(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
