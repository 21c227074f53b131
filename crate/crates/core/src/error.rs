use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("row {row}: expected {expected} features, found {found}")]
    Dimension {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: duplicate id `{id}`")]
    DuplicateId { row: usize, id: String },

    #[error("row {row}: non-finite value in column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("invalid binary embedding file: {0}")]
    Format(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("perplexity {perplexity} unreachable at point {index}")]
    PerplexityUnreachable { index: usize, perplexity: f64 },

    #[error("t-SNE diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("need at least {k} distinct vectors, found only {found}")]
    TooFewDistinct { k: usize, found: usize },

    #[error("training set has a single class")]
    SingleClass,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Wraps an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad input or configuration rather than a
    /// failure while computing.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_validation(),
            Error::Parse { .. }
            | Error::Dimension { .. }
            | Error::DuplicateId { .. }
            | Error::NonFinite { .. }
            | Error::Format(_)
            | Error::InvalidArgument(_)
            | Error::SingleClass => true,
            _ => false,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
