use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must lie in 1..={max}, got {dim}")]
    InvalidDimension { dim: usize, max: usize },

    #[error("shape mismatch: expected {expected}, got {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("ℓ∞ dimension {dim} exceeds the vertex cap {cap}")]
    VertexCapExceeded { dim: usize, cap: usize },

    #[error("{0} is not polyhedral")]
    NotPolyhedral(String),

    #[error("operator is not between Hilbert spaces ({0})")]
    NotHilbert(String),

    #[error("index n = {n} outside the admissible range 1..={max}")]
    IndexOutOfRange { n: usize, max: usize },

    #[error("frame columns are linearly dependent (residual {residual:e})")]
    DegenerateFrame { residual: f64 },

    #[error("Jacobi SVD did not converge within {sweeps} sweeps")]
    ConvergenceFailure { sweeps: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("ε-net bracket width {width:e} exceeds the requested tolerance {requested:e}")]
    NetTooCoarse { width: f64, requested: f64 },

    #[error("weight w_{index} = {value} exceeds the declared bound {bound}")]
    WeightUnbounded { index: usize, value: f64, bound: f64 },

    #[error("weights must be strictly positive, w_{index} = {value}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("‖x‖∞ = {norm} exceeds 1")]
    NormViolation { norm: f64 },

    #[error("budget of {budget} exhausted before certification")]
    BudgetExceeded { budget: usize },

    #[error("invalid settings: {0}")]
    InvalidSettings(String),
}
