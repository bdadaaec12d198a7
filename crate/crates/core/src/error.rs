use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("basis columns are not orthonormal (max deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("invalid subspace rank r={r} for ambient dimension p={p} (need 1 <= r < p)")]
    InvalidRank { p: usize, r: usize },

    #[error("target lies outside the injectivity neighborhood (min cosine {min_cosine:.3e}); node localization violated")]
    OutOfNeighborhood { min_cosine: f64 },

    #[error("cannot shard n={n} rows into K={k} nodes with at least {min_block} rows each")]
    InfeasibleShard { n: usize, k: usize, min_block: usize },

    #[error("eigengap {gap:.3e} is too small for the influence expansion")]
    SingularEigengap { gap: f64 },

    #[error("dimension d={d} is not supported here (requires d > 1)")]
    UnsupportedDimension { d: usize },

    #[error("spatial-median derivative matrix is numerically singular (min eigenvalue {min_eigenvalue:.3e})")]
    SingularDerivative { min_eigenvalue: f64 },

    #[error("contaminating {bad} of {k} nodes reaches the breakdown point (must stay below half)")]
    Breakdown { bad: usize, k: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("record validation failed for node {node_id}: {message}")]
    Record { node_id: i64, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
