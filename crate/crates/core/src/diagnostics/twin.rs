use serde::Serialize;

use crate::error::Result;
use crate::solver::{grad_physical, Deformed};
use crate::spectral::derivative_norm2;

/// `|phi_a - phi_b|_{L^2}^2 + |grad (w_a - w_b)|_{L^2}^2`.
pub fn twin_divergence<S: Deformed>(a: &S, b: &S) -> Result<f64> {
    a.species().check_grid(b.species())?;
    a.displacement().check_grid(b.displacement())?;
    let dphi = a.species().sub(b.species());
    let dw = a.displacement().sub(b.displacement());
    Ok(dphi.inner(&dphi) + derivative_norm2(&dw, 1, 0))
}

/// Conserved means and the deformation-gradient determinant floor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Invariants {
    pub mean_phi: f64,
    pub mean_v: [f64; 3],
    pub min_det: f64,
}

pub fn invariants_snapshot<S: Deformed>(state: &S) -> Invariants {
    let grad = grad_physical(state.displacement());
    let mut min_det = f64::INFINITY;
    for p in 0..grad[0].len() {
        let g = |i: usize, j: usize| grad[3 * i + j][p] + if i == j { 1.0 } else { 0.0 };
        let det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
            + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
        min_det = min_det.min(det);
    }
    Invariants {
        mean_phi: state.species().mean()[0],
        mean_v: state.velocity().map(|v| v.mean()).unwrap_or([0.0; 3]),
        min_det,
    }
}
