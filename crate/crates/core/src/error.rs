use thiserror::Error;

/// Coarse classification used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    MathDomain,
    Convergence,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Parse => 2,
            ErrorClass::MathDomain => 3,
            ErrorClass::Convergence => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("operation requires a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("ordering has {got} entries but the matrix has {expected} eigenvalues")]
    OrderingLengthMismatch { expected: usize, got: usize },

    #[error("point set is empty")]
    EmptySpectrum,

    #[error("series did not reach its certified tail within {terms} terms at argument {argument}")]
    TailNotConverged { terms: usize, argument: f64 },

    #[error("resolvent bound requested at z = 0")]
    ZeroPoint,

    #[error("matrix is not w-compact at this truncation (infinite gauge)")]
    GaugeInfinite,

    #[error("point lies on the spectrum (distance {distance:e})")]
    OnSpectrum { distance: f64 },

    #[error("truncation size {k} is out of range for a {n}x{n} matrix")]
    BadTruncationSize { k: usize, n: usize },

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("iterative decomposition failed to converge: {0}")]
    NoConvergence(&'static str),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::InvalidWeight(_)
            | Error::InvalidArgument(_) => ErrorClass::Parse,
            Error::TailNotConverged { .. } | Error::NoConvergence(_) => ErrorClass::Convergence,
            Error::NonFinite { .. }
            | Error::NonSquare { .. }
            | Error::DimensionMismatch(_)
            | Error::OrderingLengthMismatch { .. }
            | Error::EmptySpectrum
            | Error::ZeroPoint
            | Error::GaugeInfinite
            | Error::OnSpectrum { .. }
            | Error::BadTruncationSize { .. }
            | Error::DegenerateRegion(_) => ErrorClass::MathDomain,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
