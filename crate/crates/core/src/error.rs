use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    EdgeOutOfRange(usize, usize, usize),

    #[error("graph is disconnected ({0} components); distances are undefined")]
    Disconnected(usize),

    #[error("not a permutation of 0..{0}: {1}")]
    InvalidPermutation(usize, String),

    #[error("brute-force clique oracle refuses graphs with {0} nodes (limit {1})")]
    OracleTooLarge(usize, usize),

    #[error("clique set is inconsistent with the graph: {0}")]
    InvalidCliques(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("pooling did not converge within {budget} steps (node counts per level: {trace:?})")]
    Divergence { budget: usize, trace: Vec<usize> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed hierarchy document: {0}")]
    Document(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl AsRef<std::path::Path>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            line,
            message: message.into(),
        }
    }
}
