use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("loop is singular on the unit circle (|det| = {0:e})")]
    SingularLoop(f64),
    #[error("truncation residual {residual:e} exceeds tolerance {tol:e}")]
    TruncationOverflow { residual: f64, tol: f64 },
    #[error("evaluation at a pole z = {0}")]
    EvaluationAtPole(Complex64),
    #[error("matrix is not in the Lie algebra (residual {0:e})")]
    NotInAlgebra(f64),
    #[error("context is already compact")]
    AlreadyCompact,
    #[error("ad-spectrum is not integral (offset {0:e})")]
    NonIntegralElement(f64),
    #[error("spectrum is not in i(Z/2) (offset {0:e})")]
    NonQuantizedSpectrum(f64),
    #[error("loop lies outside the Birkhoff big cell (smallest singular value {0:e})")]
    OutsideBigCell(f64),
    #[error("loop lies on the Iwasawa cell boundary: {0}")]
    IwasawaCellBoundary(String),
    #[error("PR.Q split needs a non-generic cell (pivot {0:e})")]
    NonGenericCell(f64),
    #[error("coefficient {index} leaves the grading (residual {residual:e})")]
    GradingViolation { index: usize, residual: f64 },
    #[error("coefficient {index} has the wrong parity (residual {residual:e})")]
    ParityViolation { index: usize, residual: f64 },
    #[error("no pole-free path to z = {0}")]
    PathThroughPole(Complex64),
    #[error("frame coefficient at lambda^{degree} is {size:e}, beyond the degree bound")]
    SupportOverflow { degree: i32, size: f64 },
    #[error("half-integral spectrum: only the adjoint image is a Laurent loop")]
    HalfIntegerConvention,
    #[error("no rational fit up to numerator degree {0}")]
    FitDegreeExceeded(usize),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("branch point at z = {0}")]
    BranchPoint(Complex64),
    #[error("matrix matches none of the classified shapes")]
    NoMatch,
    #[error("line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
