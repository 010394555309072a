use thiserror::Error;

use crate::dro::WorldRisk;

pub type Result<T> = std::result::Result<T, CredalError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CredalError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("not a probability vector: {0}")]
    NotOnSimplex(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("incompatible supports: {0}")]
    IncompatibleSupport(String),

    #[error("quadrature did not converge within {budget} evaluations (residual estimate {residual:e})")]
    QuadratureNonConvergence { residual: f64, budget: usize },

    #[error("labelers disagree on class count: {0} vs {1}")]
    ClassCountMismatch(usize, usize),

    #[error("tabular labeler evaluated off its grid at x = {0}")]
    OffGrid(f64),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("samples mix hard and soft observations")]
    MixedObservations,

    #[error("regime {regime} is inconsistent with a {kind} disagreement matrix")]
    RegimeMismatch { regime: String, kind: String },

    #[error("training diverged: worst-world objective rose for {consecutive} consecutive steps")]
    Diverged {
        consecutive: usize,
        trace: Vec<WorldRisk>,
    },

    #[error("annotation file line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for CredalError {
    fn from(e: std::io::Error) -> Self {
        CredalError::Io(e.to_string())
    }
}

impl CredalError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CredalError::InvalidParameter(msg.into())
    }
}
