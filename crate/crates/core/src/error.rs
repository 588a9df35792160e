use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("polarization undefined for wave vector {0:?} (k_perp = 0)")]
    PolarizationUndefined([f64; 3]),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Fock space too large: {0} states exceeds the limit")]
    FockOverflow(u128),

    #[error("incompatible mode sets: {0}")]
    IncompatibleModes(String),

    #[error("spectral gap violated: smallest |eigenvalue| {0:.3e} is below the required bound")]
    GapViolation(f64),

    #[error(
        "iterative solve did not converge: residual {residual:.3e} after {iterations} iterations"
    )]
    SolveNotConverged { residual: f64, iterations: usize },

    #[error(
        "eigensolver did not converge after {iterations} iterations; Ritz history {history:?}"
    )]
    EigenNotConverged {
        iterations: usize,
        history: Vec<f64>,
    },

    #[error("rank deficiency: rank(P+) + rank(P-) = {found}, dimension {dim}")]
    RankDeficiency { found: usize, dim: usize },

    #[error("matrix exponential residual {0:.3e} exceeds tolerance")]
    ExpNotConverged(f64),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("state is not normalized: norm {0}")]
    NotNormalized(f64),

    #[error("dense eigendecomposition failed")]
    Eigendecomposition,

    #[error("malformed config: {}", .0.join("; "))]
    MalformedConfig(Vec<String>),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
