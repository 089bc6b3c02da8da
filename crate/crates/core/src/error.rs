use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("duplicate {entity} id `{id}` ({file}:{line})")]
    Duplicate {
        entity: &'static str,
        id: String,
        file: String,
        line: usize,
    },

    #[error("{count} unresolved reference(s); first: {first}")]
    Unresolved { count: usize, first: String },

    #[error("subject category catalog is empty")]
    EmptyCatalog,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid similarity matrix: {0}")]
    InvalidMatrix(String),

    #[error("no similarity matrix registered")]
    EmptyRegistry,

    #[error("paper `{0}` has no resolvable references")]
    NoReferences(String),

    #[error("paper `{0}` has no focal subject categories")]
    NoFocalScs(String),

    #[error("subject category index {0} is outside the similarity matrix")]
    UnknownSc(usize),

    #[error("paper `{0}` has no authors")]
    NoAuthors(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("design matrix: {0}")]
    Design(String),

    #[error("rank deficient design: column `{0}` is linearly dependent on the others")]
    RankDeficient(String),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("IRLS did not converge after {iterations} iterations (last step {last_step:e})")]
    NonConvergence { iterations: usize, last_step: f64 },

    #[error("separation: coefficient `{0}` diverges")]
    Separation(String),

    #[error("target IDR {target} is unreachable (ceiling {ceiling})")]
    UnreachableTarget { target: f64, ceiling: f64 },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::RankDeficient(_)
            | Error::ZeroVariance(_)
            | Error::NonConvergence { .. }
            | Error::Separation(_)
            | Error::UnreachableTarget { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
