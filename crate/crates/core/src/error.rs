use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Gell-Mann index {0} out of range 1..=8")]
    GellMannIndex(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires strong-limit pulses: {0}")]
    RequiresStrongLimit(&'static str),

    #[error("{check}: two independent constructions differ by {deviation:.3e} (tolerance {tolerance:.1e})")]
    PathMismatch {
        check: &'static str,
        deviation: f64,
        tolerance: f64,
    },

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("subspace not invariant: leakage {leakage:.3e} exceeds {tolerance:.1e}")]
    Leakage { leakage: f64, tolerance: f64 },

    #[error("truncation edge reached: amplitude changed by {0:.3e}")]
    TruncationEdge(f64),

    #[error("invalid initial state: {0}")]
    InitialState(String),

    #[error("flow classification disagrees with the reference table: {0}")]
    FlowMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
