use thiserror::Error;

pub type Result<T, E = QentError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QentError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix dimension mismatch: {0}")]
    Dimension(String),

    #[error(
        "matrix is not Hermitian: |m[{row}][{col}] - conj(m[{col}][{row}])| = {deviation:e} \
         exceeds {tolerance:e}"
    )]
    NonHermitian {
        row: usize,
        col: usize,
        deviation: f64,
        tolerance: f64,
    },

    #[error("eigenvalue {value:e} is below the clamp threshold {threshold:e}")]
    NegativeEigenvalue { value: f64, threshold: f64 },

    #[error("Hermitian eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("spectrum sums to {sum}, expected 1")]
    TraceLeak { sum: f64 },

    #[error("invalid momentum multiset: {0}")]
    InvalidMultiset(String),

    #[error(
        "momentum {momentum} appears {multiplicity} times; fermionic states obey Pauli exclusion"
    )]
    PauliExclusion { momentum: i64, multiplicity: u32 },

    #[error("splitting does not partition the momentum multiset {0}")]
    InvalidSplitting(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("values are not commensurate with the lattice: {}", .0.join(", "))]
    NonCommensurate(Vec<String>),

    #[error("Gram matrices are not defined for classical statistics")]
    ClassicalGram,

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("extrapolation failed: {0}")]
    Fit(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for QentError {
    fn from(e: std::io::Error) -> Self {
        QentError::Io(e.to_string())
    }
}

impl From<csv::Error> for QentError {
    fn from(e: csv::Error) -> Self {
        QentError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for QentError {
    fn from(e: serde_json::Error) -> Self {
        QentError::Io(e.to_string())
    }
}
