use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("insufficient truncation: coefficient of order {needed} requested, series known up to {have}")]
    InsufficientTruncation { needed: i32, have: i32 },
    #[error("series centers differ")]
    CenterMismatch,
    #[error("division by an identically zero series")]
    ZeroDivision,
    #[error("singular system (numerical rank {rank} of {size})")]
    Singular { rank: usize, size: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("input matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("density negative on the support interior (min {0:e})")]
    NegativeDensity(f64),
    #[error("point {0} lies outside the support")]
    OutsideSupport(f64),
    #[error("point lies on the cut; no strict exterior preimage")]
    OnCut,
    #[error("Hypothesis 1(ii) violated: support [{0}, {1}] is not symmetric")]
    AsymmetricSupport(f64, f64),
    #[error("Hypothesis 2 violated: kernel of C has dimension {0}")]
    Hypothesis2(usize),
    #[error("term outside the pole basis: {0}")]
    OutsideBasis(String),
    #[error("symmetry violation {0:e}")]
    Asymmetric(f64),
    #[error("missing dependency: {0}")]
    Missing(String),
    #[error("empty sample")]
    EmptySample,
    #[error("numeric overflow: {0}")]
    Overflow(String),
    #[error("evaluation on the diagonal z = ζ")]
    Diagonal,
}

pub type Result<T> = std::result::Result<T, Error>;
