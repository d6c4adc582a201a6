use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: |M - M^dagger| = {deviation:e} exceeds {allowed:e}")]
    NotHermitian { deviation: f64, allowed: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("eigensolver did not converge")]
    NumericalFailure,

    #[error("function undefined at eigenvalue {0}")]
    DomainError(f64),

    #[error("expectation value has imaginary part {0:e}")]
    NotReal(f64),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("function is not simple; offending monomials: {}", .0.join(", "))]
    NotSimple(Vec<String>),

    #[error("unsound hermitization requested without acknowledging it")]
    FlagMissing,

    #[error("grouping factors do not multiply to the given function")]
    GroupingMismatch,

    #[error("no scalar commutator declared for `{0}` and `{1}`")]
    NonScalarCommutator(String, String),

    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),

    #[error("unknown measurement label `{0}`")]
    UnknownLabel(String),

    #[error("copy assignment violates the copy rules: {0}")]
    AvcpViolation(String),

    #[error("least-squares system is rank deficient (condition ratio {0:e})")]
    IllConditioned(f64),

    #[error("packet width {width} is below the lattice spacing {spacing}")]
    InvalidWidth { width: f64, spacing: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
