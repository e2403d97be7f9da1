use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("matrix polynomial is not regular (determinant vanishes identically)")]
    NonRegular,

    #[error("structure violation in {block}: {detail}")]
    StructureViolation { block: String, detail: String },

    #[error("truncation {got} too small, at least {needed} required")]
    TruncationTooSmall { needed: usize, got: usize },

    #[error("left division failed, residual {residual:e} exceeds {tol:e}")]
    DivisionFailure { residual: f64, tol: f64 },

    #[error("determinant has {found} roots, expected {expected}")]
    RootCountMismatch { expected: usize, found: usize },

    #[error("Jordan chains at root {root} have total length {found}, expected {expected}")]
    ChainDeficiency {
        root: String,
        expected: usize,
        found: usize,
    },

    #[error("moment table for entry ({b},{a}) has {got} moments, {needed} required")]
    InsufficientMomentTable {
        b: usize,
        a: usize,
        needed: usize,
        got: usize,
    },

    #[error("invalid weight grid: {0}")]
    InvalidGrid(String),

    #[error(
        "leading principal minor of order {order} is singular (pivot {pivot:e}, scale {scale:e})"
    )]
    QuasidefiniteFailure { order: usize, pivot: f64, scale: f64 },

    #[error("sample system for column {n} is singular")]
    SingularSystem { n: usize },

    #[error("tau determinant vanishes at n = {n}")]
    ExistenceFailure { n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
