//! Inhomogeneous energy densities `W(phi, F)`: base densities, the prestrain
//! map, composites, derivative stacks to fourth order and certification of
//! the structural assumptions.

mod base;
mod certify;
mod matrix;
mod model;
mod prestrain;
mod stack;

pub use base::BaseDensity;
pub use certify::{
    appendix_inequality_check, axiom_check, coercivity_check, dist_to_so3, random_rotation, AppendixReport,
    AxiomReport, AxiomResult, CoercivityReport, NonDegeneracy, Witness,
};
pub use matrix::{polar_rotation, sqrt_spd, sqrt_spd_jet, M3};
pub use model::{eval_density, Composition, DensityModel, Response};
pub use prestrain::PrestrainMap;
pub use stack::{coords, derivatives, DerivativeStack, NCOORD};
