use thiserror::Error;

#[derive(Debug, Error)]
pub enum PrdgError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh validation failed: {0}")]
    MeshValidation(String),

    #[error("non-manifold topology: {0}")]
    NonManifold(String),

    #[error("mesh i/o error: {0}")]
    MeshIo(String),

    #[error("geometry error in cell {cell}: {message}")]
    Geometry { cell: usize, message: String },

    #[error("assumption {assumption} violated in cell {cell}: {message}")]
    AssumptionViolated {
        assumption: u8,
        cell: usize,
        message: String,
    },

    #[error("patch construction failed for cell {cell}, side {side}: {message}")]
    Patch {
        cell: usize,
        side: usize,
        message: String,
    },

    #[error("patch for cell {cell}, side {side} is not unisolvent (rank {rank} < {needed})")]
    Unisolvence {
        cell: usize,
        side: usize,
        rank: usize,
        needed: usize,
    },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("unknown benchmark '{0}'; registered: {1}")]
    UnknownBenchmark(String, String),

    #[error("benchmark data inconsistent: {0}")]
    BenchmarkConsistency(String),

    #[error("argument error: {0}")]
    Argument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PrdgError>;
