use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown node {0}")]
    UnknownNode(u32),

    #[error("assignment covers {got} nodes, instance has {expected}")]
    IncompleteAssignment { expected: usize, got: usize },

    #[error("arithmetic overflow while {0}")]
    Overflow(&'static str),

    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: i64, hi: i64 },

    #[error("instance has {n} nodes, above the cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("chimera grid dimension {k} exceeds the limit {max_k}")]
    KTooLarge { k: u32, max_k: u32 },

    #[error("({0}, {1}) is not an edge of the topology")]
    MissingEdge(u32, u32),

    #[error("edge ({0}, {1}) is not an edge of the chimera graph")]
    NonChimeraEdge(u32, u32),

    #[error("malformed LP section: {0}")]
    MalformedSection(String),

    #[error("unknown LP variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate bound for LP variable `{0}`")]
    DuplicateBound(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: duplicate entry ({i}, {j})")]
    DuplicateEntry { line: usize, i: u32, j: u32 },

    #[error("empty sample")]
    EmptySample,

    #[error("geometric mean needs strictly positive samples, got {0}")]
    NonpositiveSample(f64),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
