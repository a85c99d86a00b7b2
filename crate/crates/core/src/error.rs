use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QbmError {
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("sub-quantum moments: area {area} is below hbar/2 = {bound}")]
    SubquantumMoments { area: f64, bound: f64 },

    #[error("breakdown at t = {time}: {reason}")]
    Breakdown { time: f64, reason: String },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("state does not fit the grid: {0}")]
    Aliasing(String),

    #[error("lattice geometry: {0}")]
    Geometry(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("misuse: {0}")]
    Misuse(String),

    #[error("cell below the quantum scale: L*P = {lp} < hbar = {hbar}")]
    BelowQuantumScale { lp: f64, hbar: f64 },

    #[error("quadrature budget exceeded: {required} nodes requested, limit {limit}")]
    MemoryBudget { required: usize, limit: usize },

    #[error("cell boundary self-intersects after transport ({} vertices)", polygon.len())]
    NonRegularEvolution { polygon: Vec<(f64, f64)> },

    #[error("margin fraction {epsilon} >= 1; the cell is not regular")]
    IrregularCell { epsilon: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("conditional probability undefined: zero marginal for history index {0}")]
    UndefinedConditional(usize),

    #[error("cost guard: {entries} table entries exceed the limit of {limit}")]
    CostGuard { entries: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, QbmError>;
