use std::path::PathBuf;

/// Errors produced by the multilayer ERGM library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("self-loop at node {0}: diagonal entries must be zero")]
    SelfLoop(usize),

    #[error("thresholds must be non-empty and strictly increasing: {0}")]
    BadThresholds(String),

    #[error("maximum observed weight {max} exceeds layer count {layers}")]
    WeightExceedsLayers { max: u8, layers: usize },

    #[error("layer count {0} outside supported range 1..=64")]
    LayerCount(usize),

    #[error("layer {upper} is not nested in layer {lower}: edge ({i}, {j}) missing below")]
    NestingViolation {
        lower: usize,
        upper: usize,
        i: usize,
        j: usize,
    },

    #[error("node {node} out of range for network on {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("dyad ({0}, {1}) is already present in the layer")]
    DyadPresent(usize, usize),

    #[error("unknown node attribute `{0}`")]
    MissingAttribute(String),

    #[error("attribute `{name}` has {found} entries, expected {expected}")]
    AttributeLength {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid model specification: {0}")]
    Model(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
