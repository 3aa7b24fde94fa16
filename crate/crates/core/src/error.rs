use thiserror::Error;

/// Failures raised by the field algebra, the density toolkit and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("field mean {mean:e} exceeds tolerance {tol:e}; project out the mean first")]
    NonZeroMean { mean: f64, tol: f64 },

    #[error("state left the density domain (det = {det:e})")]
    OutOfDomain { det: f64 },

    #[error("matrix is not symmetric positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotSpd { min_eigenvalue: f64 },

    #[error("acoustic matrix is not positive definite at k = {k:?} (eigenvalue {eigenvalue:e})")]
    NotElliptic { k: [f64; 3], eigenvalue: f64 },

    #[error("unstable step at t = {t}: {reason}")]
    UnstableStep { t: f64, reason: String },

    #[error("fixed-point iteration did not contract ({iterations} iterations, last factor {factor:.3e})")]
    NoContraction { iterations: usize, factor: f64 },

    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
