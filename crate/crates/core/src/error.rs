use std::path::PathBuf;

/// Errors raised across the privatization pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument falls outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value is outside its permitted numeric range.
    #[error("range error: {what} = {value} outside [{min}, {max}]")]
    Range {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// Two operands have incompatible shapes.
    #[error("shape mismatch in {context}: expected {expected:?}, got {actual:?}")]
    Shape {
        context: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    /// A gradient, parameter or loss became NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Malformed input data (CSV, report JSON, ...).
    #[error("format error{}: {message}", path.as_ref().map(|p| format!(" in {}", p.display())).unwrap_or_default())]
    Format {
        path: Option<PathBuf>,
        message: String,
    },

    /// A checkpoint could not be decoded or does not match the expected model.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Invalid pipeline configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the command line to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn shape(context: impl Into<String>, expected: &[usize], actual: &[usize]) -> Self {
        Error::Shape {
            context: context.into(),
            expected: expected.to_vec(),
            actual: actual.to_vec(),
        }
    }

    pub fn format(path: Option<&std::path::Path>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.map(|p| p.to_path_buf()),
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::NonFinite(_) => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}
