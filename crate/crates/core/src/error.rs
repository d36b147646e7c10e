use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or matrix extents that do not fit together.
    #[error("dimension mismatch: {context} (left {left:?}, right {right:?})")]
    Dimension {
        context: String,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    /// Exact zero pivot met during an LU factorization.
    #[error("singular matrix: zero pivot at index {pivot}")]
    Singular { pivot: usize },

    #[error("invalid argument: {0}")]
    Usage(String),

    /// A dense object would exceed the memory guard.
    #[error("resource limit: {0}")]
    Resource(String),

    /// The trace functional of a state vanishes, so trace-normalized
    /// observables are undefined.
    #[error("degenerate trace: |Tr(rho)| = {0:e}")]
    DegenerateTrace(f64),

    #[error("degenerate Liouvillian kernel: second smallest |eigenvalue| = {0:e}")]
    DegenerateKernel(f64),

    #[error("time integration unstable at t = {t}; reduce dt (currently {dt})")]
    Unstable { t: f64, dt: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(context: impl Into<String>, left: &[usize], right: &[usize]) -> Self {
        Error::Dimension {
            context: context.into(),
            left: left.to_vec(),
            right: right.to_vec(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
