//! Forward-mode automatic differentiation: a generic [`Scalar`] trait with
//! first-order duals and multivariate truncated Taylor jets.

mod dual;
mod mat3;
mod scalar;
mod taylor;

pub use dual::Dual;
pub use mat3::Mat3;
pub use scalar::Scalar;
pub use taylor::{Taylor, TaylorSpace};
