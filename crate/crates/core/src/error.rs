use std::fmt;

/// Errors raised by the library. CLI exit codes are derived from [`Error::kind`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("matrix is singular to working precision (pivot {pivot:e} below {threshold:e})")]
    Singular { pivot: f64, threshold: f64 },

    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },

    #[error("degenerate denominator {value:e} below floor {floor:e} in {op}")]
    DegenerateDenominator {
        op: &'static str,
        value: f64,
        floor: f64,
    },

    #[error("calibration group {group} has a singular pre-measurement block")]
    GroupSingular {
        group: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("precondition violated in {op}: {detail}")]
    Precondition { op: &'static str, detail: String },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse failure classes, used for exit codes and machine-readable error lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 4,
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Config => "config",
            ErrorKind::Numerical => "numerical",
            ErrorKind::Io => "io",
        })
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Parse { .. } | Error::Io { .. } => ErrorKind::Io,
            Error::Dimension { .. }
            | Error::Singular { .. }
            | Error::RankDeficient { .. }
            | Error::DegenerateDenominator { .. }
            | Error::GroupSingular { .. }
            | Error::NonFinite(_)
            | Error::Precondition { .. } => ErrorKind::Numerical,
        }
    }

    /// Short stable identifier for the variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "DimensionError",
            Error::Singular { .. } => "SingularMatrixError",
            Error::RankDeficient { .. } => "RankDeficientError",
            Error::DegenerateDenominator { .. } => "DegenerateDenominatorError",
            Error::GroupSingular { .. } => "SingularMatrixError",
            Error::NonFinite(_) => "NonFiniteError",
            Error::Precondition { .. } => "PreconditionError",
            Error::Parse { .. } => "ParseError",
            Error::Config(_) => "ConfigError",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
