use serde::Serialize;

/// Errors surfaced by the CLI and the HTTP service. Each carries a stable
/// machine-readable code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] dimminer_core::Error),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {message}")]
    Parse { context: String, message: String },
    #[error("{0}")]
    Internal(String),
}

pub type AppResult<T> = Result<T, AppError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl AppError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        AppError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        AppError::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub fn code(&self) -> &'static str {
        use dimminer_core::Error as E;
        match self {
            AppError::Core(e) => match e {
                E::Config(_) => "config",
                E::DegenerateCorpus(_) => "degenerate_corpus",
                E::LexiconParse { .. } => "lexicon_parse",
                E::LexiconConflict(_) => "lexicon_conflict",
                E::DegenerateGraph(_) => "degenerate_graph",
                E::NoConvergence { .. } => "no_convergence",
                E::InvalidArgument(_) => "invalid_argument",
                E::IndexOutOfRange { .. } => "invalid_index",
                E::DegenerateClustering(_) => "degenerate_clustering",
                E::UndefinedNcut => "undefined_ncut",
                E::TooSmall { .. } => "too_small",
                E::DegenerateTraining(_) => "degenerate_training",
                E::MissingLabels(_) => "missing_labels",
                E::NotBinary(_) => "not_binary",
                E::MismatchedPartitions(..) => "mismatched_partitions",
            },
            AppError::NotFound(_) => "not_found",
            AppError::Conflict(_) => "conflict",
            AppError::Invalid(_) => "invalid_argument",
            AppError::Io { .. } => "io",
            AppError::Parse { .. } => "parse",
            AppError::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            AppError::NotFound(_) => 404,
            AppError::Conflict(_) => 409,
            AppError::Core(dimminer_core::Error::NoConvergence { .. }) => 500,
            AppError::Core(_) | AppError::Invalid(_) | AppError::Parse { .. } => 422,
            AppError::Io { .. } | AppError::Internal(_) => 500,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            code: self.code().to_string(),
            message: self.to_string(),
        }
    }
}
