use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("bad magic: expected SDEM header")]
    BadMagic,

    #[error("unsupported SDEM version {0}")]
    BadVersion(u8),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("covariance of component {0} is singular")]
    SingularComponent(usize),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// True for errors caused by bad user input (as opposed to a failure while
    /// running an otherwise valid request).
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::EmptyDataset
            | Error::Invalid(_)
            | Error::Shape(_)
            | Error::BadMagic
            | Error::BadVersion(_)
            | Error::Truncated { .. }
            | Error::NonFinite { .. }
            | Error::Config(_)
            | Error::Json(_)
            | Error::Csv(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            Error::Io(_) | Error::Diverged(_) | Error::SingularComponent(_) => false,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage { stage, source: Box::new(e) })
    }
}
