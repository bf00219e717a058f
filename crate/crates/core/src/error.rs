use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |h_ij - conj(h_ji)| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary (max |u^dag u - I| = {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("unsupported number of qubits: {0} (expected 1 or 2)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid restricted process matrix: {0}")]
    InvalidRestrictedChi(&'static str),

    #[error("invalid Pauli channel: {0}")]
    InvalidPauliChannel(&'static str),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(&'static str),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("noise bias is undefined (0/0)")]
    UndefinedBias,

    #[error("a point distribution has no surface density")]
    PointHasNoDensity,

    #[error("vector is not of unit norm (norm = {norm})")]
    NotUnitVector { norm: f64 },

    #[error("internal consistency check failed: {what} = {value:e}")]
    InternalConsistency { what: &'static str, value: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
