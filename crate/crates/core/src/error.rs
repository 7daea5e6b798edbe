use thiserror::Error;

/// Errors raised by kernel arithmetic, combinatorics and the limit harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChaosError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: kernels live on different grids")]
    GridMismatch,

    #[error("order mismatch: expected {expected}, found {found}")]
    OrderMismatch { expected: usize, found: usize },

    #[error("contraction index {index} out of range (allowed {min}..={max})")]
    ContractionRange { index: usize, min: usize, max: usize },

    #[error("index {idx:?} outside a grid with {cells} cells per axis (order {order})")]
    IndexOutOfRange {
        idx: Vec<usize>,
        cells: usize,
        order: usize,
    },

    #[error("flavor mismatch: cannot combine {0} with {1}")]
    FlavorMismatch(&'static str, &'static str),

    #[error("partition size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("unknown label {0}")]
    UnknownLabel(usize),

    #[error("resource guard: estimated {estimated} word evaluations exceeds cap {cap}")]
    ResourceGuard { estimated: u128, cap: u128 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, ChaosError>;

impl From<serde_json::Error> for ChaosError {
    fn from(e: serde_json::Error) -> Self {
        ChaosError::Parse(e.to_string())
    }
}
