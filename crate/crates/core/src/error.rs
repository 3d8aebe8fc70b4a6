use thiserror::Error;

use crate::spectra::ResonanceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("missing required config key `{0}`")]
    MissingKey(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("Newton iteration failed at tau = {tau:.6e} (scaled residual {residual:.3e})")]
    NewtonDivergence { tau: f64, residual: f64 },

    #[error("mode {mode} is overdamped or critically damped (discriminant {discriminant:.3e} >= 0)")]
    Overdamped { mode: usize, discriminant: f64 },

    #[error("small divisor {denominator:.3e} at row {row}, master triple {triple:?}")]
    SmallDivisor {
        row: usize,
        triple: Vec<usize>,
        denominator: f64,
    },

    #[error("non-resonance check failed: {0}")]
    Resonance(Box<ResonanceReport>),

    #[error("{what} index {index} out of range (len {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("homogeneity check failed: expected degree {degree}, relative error {error:.3e}")]
    DegreeCheck { degree: u32, error: f64 },

    #[error("unsupported nonlinearity: {0}")]
    Unsupported(String),

    #[error("parametrization input is not a conjugate pair (mismatch {0:.3e})")]
    NotConjugate(f64),

    #[error("non-positive sample {value:.3e} at tau = {tau:.6e} in fit window")]
    NonPositiveSample { tau: f64, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 configuration, 4 resonance abort, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigSyntax { .. } | Error::MissingKey(_) | Error::InvalidConfig(_) => 2,
            Error::Resonance(_) => 4,
            _ => 3,
        }
    }
}
