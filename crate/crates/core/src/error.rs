use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("grid mismatch: expected {expected} cells, found {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not Hermitian (defect {defect:.3e} exceeds {tolerance:.1e})")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error("real part of trace is not positive ({0:.3e})")]
    NonPositiveTrace(f64),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("invalid filter width {0}")]
    InvalidFilter(f64),

    #[error("invalid scan plan: {0}")]
    InvalidPlan(String),

    #[error("zero vector has no defined phase")]
    ZeroVector,

    #[error("payload length mismatch for {path}: expected {expected} bytes, found {found}")]
    LengthMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("schema violation in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("unknown array kind `{0}`")]
    UnknownKind(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable numeric code per failure class, used as the CLI exit status.
    pub fn code(&self) -> i32 {
        match self {
            Error::InvalidGrid(_) => 10,
            Error::InvalidMode(_) => 11,
            Error::InvalidMixture(_) => 12,
            Error::GridMismatch { .. } => 13,
            Error::ShapeMismatch(_) => 14,
            Error::NotHermitian { .. } => 15,
            Error::NonPositiveTrace(_) => 16,
            Error::InvalidNoise(_) => 17,
            Error::InvalidFilter(_) => 18,
            Error::InvalidPlan(_) => 19,
            Error::ZeroVector => 20,
            Error::LengthMismatch { .. } => 30,
            Error::Schema { .. } => 31,
            Error::UnknownKind(_) => 32,
            Error::Config(_) => 33,
            Error::Io { .. } => 34,
            Error::Stage { source, .. } => source.code(),
        }
    }

    /// Pipeline stage that produced the error, if labelled.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        })
    }
}
