use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed WAV: {0}")]
    WavFormat(String),

    #[error("unsupported channel layout: {channels} channels (mono required)")]
    UnsupportedLayout { channels: u16 },

    #[error("unsupported codec: format tag {format_tag}, {bits_per_sample} bits per sample")]
    UnsupportedCodec { format_tag: u16, bits_per_sample: u16 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: end {end_s} s must be after start {start_s} s")]
    AnnotationRange { line: usize, start_s: f64, end_s: f64 },

    #[error("line {line}: unknown {field} `{token}`")]
    Vocabulary { line: usize, field: &'static str, token: String },

    #[error("annotation {index} [{start_s}, {end_s}] s lies outside the {duration_s} s signal")]
    SegmentOutOfRange { index: usize, start_s: f64, end_s: f64, duration_s: f64 },

    #[error("segment has {samples} samples, fewer than one {frame_len}-sample frame")]
    TooShort { samples: usize, frame_len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("grouping error: {0}")]
    Grouping(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("impurity of an empty node is undefined")]
    EmptyNode,

    #[error("training error: {0}")]
    Training(String),

    #[error("feature importance undefined: every tree is a single leaf")]
    UndefinedImportance,

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("model file: {0}")]
    Model(String),
}

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Io,
    Format,
    Data,
    Internal,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::WavFormat(_)
            | Error::UnsupportedLayout { .. }
            | Error::UnsupportedCodec { .. }
            | Error::Parse { .. }
            | Error::AnnotationRange { .. }
            | Error::Vocabulary { .. }
            | Error::Model(_) => ErrorCategory::Format,
            Error::SegmentOutOfRange { .. }
            | Error::TooShort { .. }
            | Error::Config(_)
            | Error::Domain(_)
            | Error::Degenerate(_)
            | Error::Grouping(_)
            | Error::Dimension(_)
            | Error::Shape(_)
            | Error::Training(_)
            | Error::UndefinedImportance
            | Error::Stratification(_) => ErrorCategory::Data,
            Error::EmptyNode => ErrorCategory::Internal,
            Error::Iteration { source, .. } => source.category(),
        }
    }
}
