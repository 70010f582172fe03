use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClarkError {
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("matrix is not Hermitian (asymmetry {asym:e})")]
    NotHermitian { asym: f64 },
    #[error("core matrix is numerically singular (condition estimate {cond:e})")]
    SingularCore { cond: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("point {z} is within {dist:e} of atom {atom}")]
    TooCloseToAtom { z: String, atom: usize, dist: f64 },
    #[error("point must lie inside the unit disk (|z| = {modulus})")]
    OutsideDisk { modulus: f64 },
    #[error("regularization radius r = 1 is not allowed")]
    BadRadius,
    #[error("radial limit did not converge (last increment {increment:e})")]
    NoConvergence { increment: f64 },
    #[error("contraction parameter is not strict (norm {norm})")]
    GammaNotStrict { norm: f64 },
    #[error("parameter is not a contraction (norm {norm})")]
    NotContraction { norm: f64 },
    #[error("characteristic function is not inner: {0}")]
    NotInner(String),
    #[error("truncated series tail {tail:e} exceeds budget {budget:e}")]
    TruncationOverflow { tail: f64, budget: f64 },
    #[error("unsupported test function: {0}")]
    UnsupportedTestFunction(String),
    #[error("horizon {n_max} exceeds truncation-safe bound {bound}")]
    HorizonTooLarge { n_max: usize, bound: usize },
    #[error("atom {atom} has fiber dimension {dim} > 1")]
    NotScalarFibers { atom: usize, dim: usize },
    #[error("no admissible random vector after {0} attempts")]
    ExhaustedRetries(usize),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("model space has dimension {found}, expected {expected}")]
    ModelDimension { expected: usize, found: usize },
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, ClarkError>;
