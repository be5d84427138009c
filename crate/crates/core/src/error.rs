use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry encountered in {0}")]
    NonFinite(&'static str),

    #[error("matrix asymmetry {max_dev:.3e} exceeds tolerance {tol:.3e}")]
    Asymmetric { max_dev: f64, tol: f64 },

    #[error("symmetric eigensolver failed to converge: {0}")]
    EigenFailed(String),

    #[error("infeasible constraint system: {0}")]
    Infeasible(String),

    #[error("linear program is unbounded below")]
    Unbounded,

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("iteration limit reached in {context} (best residual {residual:.3e})")]
    IterationLimit { context: &'static str, residual: f64 },

    #[error("projection iteration limit (worst violation {max_violation:.3e})")]
    ProjectionIterationLimit {
        best: Box<[f64]>,
        max_violation: f64,
    },

    #[error("matrix does not have full row rank")]
    RankDeficient,

    #[error("subset enumeration guard exceeded: {subsets:.3e} subsets > {guard:.3e}")]
    EnumerationGuard { subsets: f64, guard: f64 },

    #[error("constraint set fails the row-monotonicity convexity test: {0}")]
    UnsupportedConstraint(String),

    #[error("repeated eigenvalues (min gap {min_gap:.3e} <= {gap_tol:.3e})")]
    RepeatedEigenvalues { min_gap: f64, gap_tol: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
