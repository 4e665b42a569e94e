use thiserror::Error;

/// Why a Newton projection onto the manifold did not produce a point.
///
/// Samplers treat every variant as a rejected proposal.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ProjectionFailure {
    #[error("Newton projection did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Newton system along the normal directions is singular")]
    SingularSystem,
}

#[derive(Debug, Error)]
pub enum CgfdError {
    #[error("constraint gradient is rank deficient (condition number {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("point is off the manifold (|g| = {residual:e})")]
    OffManifold { residual: f64 },
    #[error("data-generating gradient has a vanishing (pseudo)determinant")]
    DegenerateJacobian,
    #[error("pseudoinverse spectrum is not separated from zero (relative gap {gap:e})")]
    PseudoinverseFailure { gap: f64 },
    #[error("chart coordinates lie outside the chart domain")]
    OutOfDomain,
    #[error("model requires at least one observation")]
    EmptyData,
    #[error("observation {value} lies outside the support (0, 1)")]
    DataOutOfRange { value: f64 },
    #[error("invalid knot sequence: {0}")]
    KnotsInvalid(String),
    #[error("I + A is numerically singular")]
    CayleySingular,
    #[error("covariance matrix is not symmetric positive definite")]
    CovarianceNotSpd,
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("could not find a feasible starting point: {0}")]
    InfeasibleInit(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("no samples supplied")]
    EmptySamples,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Projection(#[from] ProjectionFailure),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CgfdError {
    /// Stable machine-readable name for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            CgfdError::RankDeficient { .. } => "RankDeficient",
            CgfdError::OffManifold { .. } => "OffManifold",
            CgfdError::DegenerateJacobian => "DegenerateJacobian",
            CgfdError::PseudoinverseFailure { .. } => "PseudoinverseFailure",
            CgfdError::OutOfDomain => "OutOfDomain",
            CgfdError::EmptyData => "EmptyData",
            CgfdError::DataOutOfRange { .. } => "DataOutOfRange",
            CgfdError::KnotsInvalid(_) => "KnotsInvalid",
            CgfdError::CayleySingular => "CayleySingular",
            CgfdError::CovarianceNotSpd => "CovarianceNotSPD",
            CgfdError::BadShape(_) => "BadShape",
            CgfdError::InfeasibleInit(_) => "InfeasibleInit",
            CgfdError::NonFinite(_) => "NonFinite",
            CgfdError::EmptySamples => "EmptySamples",
            CgfdError::Config(_) => "Config",
            CgfdError::Projection(_) => "Projection",
            CgfdError::Io(_) => "Io",
        }
    }
}

pub type Result<T, E = CgfdError> = std::result::Result<T, E>;
