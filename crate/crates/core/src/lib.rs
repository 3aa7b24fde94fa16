pub mod ad;
pub mod error;
pub mod energy;
pub mod spectral;
pub mod solver;
pub mod diagnostics;
pub mod run;

pub use error::{Error, Result};
