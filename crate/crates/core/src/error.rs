use alloc::string::String;

/// Errors raised by the clustering pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),
    #[error("lexicon parse error on line {line}: {message}")]
    LexiconParse { line: usize, message: String },
    #[error("lexicon conflict: term `{0}` listed as both positive and negative")]
    LexiconConflict(String),
    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),
    #[error("eigensolver did not converge (worst residual {worst_residual:e})")]
    NoConvergence { worst_residual: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("eigenvector index {index} out of range 1..={m}")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("degenerate clustering input: {0}")]
    DegenerateClustering(String),
    #[error("normalized cut undefined: a cluster has zero total degree")]
    UndefinedNcut,
    #[error("too few documents: need at least {needed}, got {got}")]
    TooSmall { needed: usize, got: usize },
    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),
    #[error("missing gold labels: {0}")]
    MissingLabels(String),
    #[error("expected 2 gold classes, found {0}")]
    NotBinary(usize),
    #[error("partitions cover different document sets ({0} vs {1})")]
    MismatchedPartitions(usize, usize),
}

pub type Result<T> = core::result::Result<T, Error>;
