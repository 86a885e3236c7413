use thiserror::Error;

use crate::lattice::Site;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice box: {0}")]
    InvalidBox(String),

    #[error("site {0} is outside the box")]
    SiteOutsideBox(Site),

    #[error("no potential value for site {0}")]
    MissingPotential(Site),

    #[error("no spin value for site {0}")]
    MissingSpin(Site),

    #[error("multi-particle boxes must be identical for (anti)symmetrization")]
    NonIdenticalBoxes,

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose by {diff}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("empty matrix or spectrum")]
    Empty,

    #[error("eigensolver did not converge")]
    SolverFailure,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("covariance is not positive definite on the requested sites (even after jitter)")]
    NotPositiveDefinite,

    #[error("invalid field model: {0}")]
    InvalidModel(String),

    #[error("quadrature did not converge on [{low}, {high}]")]
    Quadrature { low: f64, high: f64 },

    #[error("grid step {step} is coarser than epsilon/4 = {limit}")]
    ResolutionTooCoarse { step: f64, limit: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("too many failed trials: {failed} of {trials}")]
    TooManyFailures { failed: usize, trials: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
