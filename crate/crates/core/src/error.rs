use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed or unsupported file contents.
    #[error("format error: {0}")]
    Format(String),

    /// Dimension or length mismatch between inputs.
    #[error("size error: {0}")]
    Size(String),

    /// Cholesky factorization failed even after diagonal loading.
    #[error("singular matrix (condition estimate {condition:.3e})")]
    SingularMatrix { condition: f64 },

    /// Eigen iteration hit its cap without meeting the tolerance.
    #[error("eigen iteration did not converge after {iterations} iterations")]
    Convergence { iterations: usize },

    /// Parameter estimation could not produce a usable result.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Aggregate numeric failure (e.g. too many bins failed to solve).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Invalid configuration or flag combination.
    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    /// Process exit code for the CLI: 1 usage, 2 I/O, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Io { .. } | Error::Format(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
