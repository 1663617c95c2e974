use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin manifold: {0}")]
    InvalidManifold(String),

    #[error("rotation axis must be a unit vector (|n| = {norm})")]
    NonUnitAxis { norm: f64 },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },

    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("operator requires a spin-manifold basis")]
    NotSpinBasis,

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("Fock truncation guard tripped: top-level population {population:e}")]
    TruncationGuard { population: f64 },

    #[error("heating outside single-jump regime: rate*t = {rt}")]
    HeatingRegime { rt: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("error cutoff {epsilon} is unreachable for fit with offset {offset}")]
    UnreachableCutoff { epsilon: f64, offset: f64 },

    #[error("Born probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical guard failures, as opposed to bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::TruncationGuard { .. }
                | Error::HeatingRegime { .. }
                | Error::ProbabilitySum(_)
                | Error::DegenerateFit(_)
                | Error::InvalidDensityMatrix(_)
        )
    }
}
