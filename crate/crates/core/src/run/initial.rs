use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::DensityModel;
use crate::error::Result;
use crate::solver::{initial_equilibrium, DynamicState, LinearizedSymbols, QuasiState};
use crate::spectral::{sobolev_norm, Field, Space};

/// Seeded band-limited initial data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub seed: u64,
    pub amplitude: f64,
    /// Largest max-norm mode index of the random fields.
    pub band: usize,
    pub mean_zero_phi: bool,
    /// Mean of `phi0` when `mean_zero_phi` is false.
    pub phi_mean: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            seed: 0,
            amplitude: 1e-2,
            band: 2,
            mean_zero_phi: true,
            phi_mean: 0.0,
        }
    }
}

fn scaled<const C: usize>(mut f: Field<C>, k: u32, target: f64) -> Field<C> {
    let norm = sobolev_norm(&f, k);
    if target == 0.0 || norm == 0.0 {
        return Field::zeros(f.space());
    }
    f.scale(target / norm);
    f
}

fn phi_offset(data: &DataConfig) -> f64 {
    if data.mean_zero_phi {
        0.0
    } else {
        data.phi_mean
    }
}

/// `|w|_{H^4} = |v|_{H^3} = |phi - mean|_{H^3} = amplitude`.
pub fn dynamic_initial(space: &Arc<Space>, data: &DataConfig) -> DynamicState {
    let mut rng = ChaCha8Rng::seed_from_u64(data.seed);
    let w = scaled(Field::<3>::random_band(space, data.band, &mut rng), 4, data.amplitude);
    let v = scaled(Field::<3>::random_band(space, data.band, &mut rng), 3, data.amplitude);
    let mut phi = scaled(Field::<1>::random_band(space, data.band, &mut rng), 3, data.amplitude);
    phi.set_mean([phi_offset(data)]);
    DynamicState { w, v, phi, t: 0.0 }
}

/// `phi0` with `|phi0|_{H^2} = amplitude`.
pub fn quasi_species(space: &Arc<Space>, data: &DataConfig) -> Field<1> {
    let mut rng = ChaCha8Rng::seed_from_u64(data.seed);
    let mut phi = scaled(Field::<1>::random_band(space, data.band, &mut rng), 2, data.amplitude);
    phi.set_mean([phi_offset(data)]);
    phi
}

/// `phi0` from [`quasi_species`] with the displacement in equilibrium.
pub fn quasi_initial(
    space: &Arc<Space>,
    data: &DataConfig,
    model: &DensityModel,
    symbols: &LinearizedSymbols,
    tol: f64,
    max_iter: usize,
) -> Result<QuasiState> {
    let phi = quasi_species(space, data);
    initial_equilibrium(&phi, model, symbols, tol, max_iter)
}
