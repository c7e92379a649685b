use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid metadata: {0}")]
    InvalidMeta(String),
    #[error("shape mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("non-finite value at [t={t}, n={n}, c={c}] and no missing sentinel declared")]
    NonFinite { t: usize, n: usize, c: usize },
    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),
    #[error("timestep {timestep} out of range (dataset has {len} timesteps)")]
    TimestepOutOfRange { timestep: usize, len: usize },
    #[error("profile does not match panel: {0}")]
    ProfileMismatch(String),
    #[error("empty design: no row has an observed target and {lags} observed lags at horizon {horizon}")]
    EmptyDesign { lags: usize, horizon: usize },
    #[error("underdetermined least squares: {rows} rows for {cols} columns")]
    Underdetermined { rows: usize, cols: usize },
    #[error("design matrix is rank deficient at column {column}; use ridge > 0")]
    RankDeficient { column: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no evaluable cells (every cell masked in truth or prediction)")]
    NoEvaluableCells,
    #[error("invalid date: {0}")]
    InvalidDate(String),
}

pub type Result<T> = core::result::Result<T, Error>;
