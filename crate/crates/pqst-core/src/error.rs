//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by matrix kernels, samplers, chain execution, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {count} entries cannot fill {dim}x{dim}")]
    NotSquare { dim: usize, count: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("non-finite entries encountered")]
    NonFiniteEntries,

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("degenerate QR decomposition: |r_ii| = {0:.3e}")]
    DegenerateDecomposition(f64),

    #[error("degenerate state: Tr(WW†) underflowed")]
    DegenerateState,

    #[error("invalid parameter vector: {0}")]
    InvalidParamVector(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite state in chain {chain} at stored sample {sample}")]
    NonFiniteState { chain: u32, sample: usize },

    #[error("chain failures: {}", format_chain_failures(.0))]
    ChainFailure(Vec<(u32, String)>),

    #[error("empty sample pool")]
    EmptyPool,

    #[error("degenerate chain: zero variance at lag 0, ACF undefined")]
    DegenerateChain,

    #[error("max lag {l_max} too large for chain of {n} samples")]
    LagTooLarge { l_max: usize, n: usize },

    #[error("insufficient chains: requested {requested}, available {available}")]
    InsufficientChains { requested: u32, available: u32 },

    #[error("corrupt sample file: {0}")]
    CorruptSampleFile(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_chain_failures(failures: &[(u32, String)]) -> String {
    failures
        .iter()
        .map(|(r, msg)| format!("chain {r}: {msg}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
