use std::sync::Arc;

use crate::spectral::{ScalarField, Space, VectorField};

/// State of the hyperbolic-parabolic system: displacement `w = u - id`,
/// velocity `v = u_t`, species `phi`, time `t`.
#[derive(Clone, Debug)]
pub struct DynamicState {
    pub w: VectorField,
    pub v: VectorField,
    pub phi: ScalarField,
    pub t: f64,
}

/// State of the quasi-static system: displacement `w = u - id`, species
/// `phi`, time `t`.
#[derive(Clone, Debug)]
pub struct QuasiState {
    pub w: VectorField,
    pub phi: ScalarField,
    pub t: f64,
}

impl DynamicState {
    pub fn equilibrium(space: &Arc<Space>) -> Self {
        DynamicState {
            w: VectorField::zeros(space),
            v: VectorField::zeros(space),
            phi: ScalarField::zeros(space),
            t: 0.0,
        }
    }

    pub fn space(&self) -> &Arc<Space> {
        self.phi.space()
    }
}

impl QuasiState {
    pub fn equilibrium(space: &Arc<Space>) -> Self {
        QuasiState {
            w: VectorField::zeros(space),
            phi: ScalarField::zeros(space),
            t: 0.0,
        }
    }

    pub fn space(&self) -> &Arc<Space> {
        self.phi.space()
    }
}

/// Common read access to the displacement and species fields.
pub trait Deformed {
    fn displacement(&self) -> &VectorField;
    fn species(&self) -> &ScalarField;
    fn velocity(&self) -> Option<&VectorField> {
        None
    }
    fn time(&self) -> f64;
}

impl Deformed for DynamicState {
    fn displacement(&self) -> &VectorField {
        &self.w
    }
    fn species(&self) -> &ScalarField {
        &self.phi
    }
    fn velocity(&self) -> Option<&VectorField> {
        Some(&self.v)
    }
    fn time(&self) -> f64 {
        self.t
    }
}

impl Deformed for QuasiState {
    fn displacement(&self) -> &VectorField {
        &self.w
    }
    fn species(&self) -> &ScalarField {
        &self.phi
    }
    fn time(&self) -> f64 {
        self.t
    }
}
