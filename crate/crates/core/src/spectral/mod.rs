//! Band-limited periodic fields on the 3-torus: real-to-complex transforms,
//! exact spectral differentiation, Sobolev norms, mode truncation and
//! dealiased pointwise nonlinearities.

mod field;
mod grid;
mod io;
mod ops;
mod space;

pub use field::{Field, MatrixField, ScalarField, VectorField};
pub use grid::Grid;
pub use io::FieldSummary;
pub use ops::{
    derivative_norm2, divergence, divergence_rowwise, gradient, inverse_laplacian, laplacian,
    pointwise_map, pointwise_map_fields, sobolev_norm, sobolev_norm2, truncate_modes, Gradient,
};
pub(crate) use ops::truncate_in_place;
pub use space::Space;
