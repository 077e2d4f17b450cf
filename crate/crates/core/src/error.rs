use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock cutoff: dimension {0} < 2")]
    InvalidCutoff(usize),

    #[error("unknown Pauli axis `{0}` (expected x, y, z, plus or minus)")]
    UnknownAxis(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("Hilbert space mismatch in {0}")]
    SpecMismatch(&'static str),

    #[error("subsystem slot {slot} out of range (space has {len} subsystems)")]
    InvalidSlot { slot: usize, len: usize },

    #[error("partial trace needs at least one subsystem to keep")]
    EmptyKeep,

    #[error("dimension {dim} exceeds the limit {limit}: {hint}")]
    TooLarge {
        dim: usize,
        limit: usize,
        hint: &'static str,
    },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("negative temperature {0} K")]
    NegativeTemperature(f64),

    #[error("step size underflow at t = {t} us (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("state invariant violated at t = {t} us: {what}")]
    InvariantViolation { t: f64, what: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("quadrature did not converge (error estimate {estimate:e})")]
    QuadratureFailure { estimate: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown scenario `{0}` (expected fig2, fig2_inset, fig3a, fig3b or fig3c)")]
    UnknownScenario(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 4,
            Error::StepSizeUnderflow { .. }
            | Error::NumericalFailure(_)
            | Error::InvariantViolation { .. }
            | Error::DegenerateFit(_)
            | Error::QuadratureFailure { .. }
            | Error::TooLarge { .. } => 3,
            _ => 2,
        }
    }
}
