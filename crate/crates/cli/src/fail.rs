use std::fmt;
use std::process::ExitCode;

use spantag::scorer::ScoreError;
use spantag::tagger::TaggerError;
use spantag::corpus::CorpusError;

/// A failed command and the exit code it maps to: 2 for bad input or
/// configuration, 1 for anything else.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type CmdResult<T = ()> = Result<T, Failure>;

impl Failure {
    pub fn user(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 2,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: 1,
            error: error.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code)
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self {
            code: self.code,
            error: self.error.context(msg),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        Self::user(e)
    }
}

impl From<ScoreError> for Failure {
    fn from(e: ScoreError) -> Self {
        Self::user(e)
    }
}

impl From<TaggerError> for Failure {
    fn from(e: TaggerError) -> Self {
        match e {
            TaggerError::NoSamples
            | TaggerError::InconsistentCatalog { .. }
            | TaggerError::Config(_)
            | TaggerError::VersionMismatch { .. }
            | TaggerError::ScalarMismatch { .. }
            | TaggerError::BadModel(_)
            | TaggerError::Io(_)
            | TaggerError::Score(_) => Self::user(e),
            _ => Self::internal(e),
        }
    }
}
