use thiserror::Error;

/// Every failure the pipeline can report.
///
/// The variants are grouped by how a batch run should react to them: structural
/// and configuration problems are the caller's fault, numerical preconditions
/// describe a model or discretization that cannot support the requested
/// computation, and assertion failures come from experiment checks.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands do not live on the same grid or have incompatible shapes.
    #[error("structural mismatch on {axis}: {detail}")]
    Structural { axis: String, detail: String },

    /// The configuration is incomplete, contradictory or has unknown keys.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical precondition (gap, contour clearance, resolution, conditioning) failed.
    #[error("numerical precondition failed: {0}")]
    Precondition(String),

    /// An embedded experiment assertion did not hold.
    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A binary field or table file could not be decoded.
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn structural(axis: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Structural {
            axis: axis.into(),
            detail: detail.into(),
        }
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 2 config, 3 numerical precondition, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Precondition(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
