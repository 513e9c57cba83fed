use thiserror::Error;

use crate::solver::GroundSolution;
use crate::variational::VariationalResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max |M - M^dagger| = {defect:.3e})")]
    NonHermitian { defect: f64 },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("displacement amplitude {beta} too large for working dimension {working_dim} (need beta^2 <= {limit})")]
    AmplitudeTooLarge { beta: f64, working_dim: usize, limit: f64 },

    #[error("squeeze parameter {gamma} outside |gamma| <= {limit}")]
    SqueezeTooLarge { gamma: f64, limit: f64 },

    #[error("frame displacement lambda/omega = {shift} too large for working dimension {working_dim}")]
    DisplacementTooLarge { shift: f64, working_dim: usize },

    #[error("eigendecomposition failed: {0}")]
    EigDecompositionFailure(String),

    #[error("ground energy not converged to tolerance (last change {:.3e} at dim {})", .0.energy_delta, .0.dim_used)]
    NotConverged(Box<GroundSolution>),

    #[error("state has no definite parity label; a sector is required for this check")]
    SectorRequired,

    #[error("simplex optimizer stalled after {} evaluations", .0.evaluations)]
    OptimizerStalled(Box<VariationalResult>),

    #[error("zero-norm state cannot be normalized")]
    ZeroNorm,
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
