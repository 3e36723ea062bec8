use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("corrupt input: {0}")]
    Corruption(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("all key positions are masked")]
    EmptyAttention,

    #[error("document has no sentences: {0}")]
    EmptyDocument(String),

    #[error("dataset must contain both classes (yes={yes}, no={no})")]
    ClassCoverage { yes: usize, no: usize },

    #[error("training diverged at step {step}")]
    TrainingDiverged {
        step: usize,
        /// Trace rows up to the last finite loss.
        trace: Vec<crate::train::TraceRow>,
    },

    #[error("cannot split {n} observations into {k} folds")]
    Folds { n: usize, k: usize },

    #[error("cannot aggregate an empty meeting: {0}")]
    EmptyAggregation(String),

    #[error("entropy undefined for zero total count")]
    UndefinedEntropy,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("response outside the model domain at rows {rows:?}")]
    Domain { rows: Vec<usize> },

    #[error("rank-deficient design; offending columns {columns:?}")]
    RankDeficient { columns: Vec<String> },

    #[error("did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        /// Objective value per iteration.
        trace: Vec<f64>,
    },

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("effect not identified: {0}")]
    Unidentified(String),

    #[error("zero-norm vector has no direction")]
    ZeroNorm,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 usage, 3 data, 4 numeric/convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::TrainingDiverged { .. }
            | Error::NonConvergence { .. }
            | Error::Undefined(_)
            | Error::Unidentified(_)
            | Error::RankDeficient { .. }
            | Error::EmptyAttention
            | Error::ZeroNorm
            | Error::UndefinedEntropy => 4,
            _ => 3,
        }
    }
}
