use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gauge has not been validated for monotonicity")]
    GaugeNotValidated,
    #[error("invalid gauge: {0}")]
    InvalidGauge(String),
    #[error("tail of the gauge integral did not converge before t = {horizon:e}")]
    TailNotConvergent { horizon: f64 },
    #[error("argument outside the domain of definition: {0}")]
    DomainError(String),
    #[error("discretization produced no lattice sites")]
    EmptyDomain,
    #[error("root {root:?} is not in the delta-interior of the domain")]
    RootTooClose { root: (i64, i64) },
    #[error("dense Green function requested for {sites} sites, cap is {cap}")]
    CapExceeded { sites: usize, cap: usize },
    #[error("spectral methods need a full rectangular site set")]
    NotRectangle,
    #[error("index {index} outside the valid range {lo}..={hi}")]
    IndexRange { index: usize, lo: usize, hi: usize },
    #[error("measure has zero or non-finite total mass")]
    DegenerateMeasure,
    #[error("linear solve did not reach residual {tolerance:e} (got {residual:e} after {iterations} iterations)")]
    SolverFailure {
        residual: f64,
        tolerance: f64,
        iterations: usize,
    },
    #[error("annulus {k} contains no lattice sites")]
    EmptyAnnulus { k: usize },
    #[error("rejection budget exhausted after {proposals} proposals ({accepted} accepted)")]
    RejectionBudgetExhausted { proposals: u64, accepted: u64 },
    #[error("empty radius grid")]
    EmptyGrid,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
