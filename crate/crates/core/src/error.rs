use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports. The `op` fields name the operation that
/// raised the error so callers (and the CLI) can surface it verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch (expected {expected}, found {found})")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("{0}: non-finite entry")]
    NonFinite(&'static str),

    #[error("{op}: matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { op: &'static str, asymmetry: f64 },

    #[error("{op}: matrix is not positive definite")]
    NotPositiveDefinite { op: &'static str },

    #[error("{op}: matrix is singular or numerically rank-deficient")]
    Singular { op: &'static str },

    #[error("{op}: condition estimate {cond:.3e} exceeds {limit:.1e}")]
    IllConditioned {
        op: &'static str,
        cond: f64,
        limit: f64,
    },

    #[error("{op}: rank-deficient Gram matrix ({detail})")]
    RankDeficient { op: &'static str, detail: String },

    #[error("{op}: breakdown at iteration {iteration}: {detail}")]
    Breakdown {
        op: &'static str,
        iteration: usize,
        detail: String,
    },

    #[error("{op}: precondition violated: {detail}")]
    Precondition { op: &'static str, detail: String },

    #[error("matrix market: line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn precondition(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn dims(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
