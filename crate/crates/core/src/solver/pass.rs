//! Pseudo-spectral evaluation of the density and its first derivatives on
//! the physical grid.

use std::sync::Arc;

use num_complex::Complex64;

use crate::ad::Mat3;
use crate::energy::DensityModel;
use crate::error::{Error, Result};
use crate::spectral::{MatrixField, ScalarField, Space, VectorField};

/// Physical samples of `grad w` (nine arrays, row-major entries).
pub fn grad_physical(w: &VectorField) -> Vec<Vec<f64>> {
    let space = w.space().clone();
    let mut out = Vec::with_capacity(9);
    let mut buf = vec![Complex64::new(0.0, 0.0); space.len()];
    for i in 0..3 {
        let src = w.component(i);
        for j in 0..3 {
            for (idx, (b, s)) in buf.iter_mut().zip(src).enumerate() {
                *b = s * Complex64::new(0.0, space.kd(idx)[j]);
            }
            out.push(space.inverse(&buf));
        }
    }
    out
}

/// Outputs of one pointwise pass at a state.
#[derive(Clone, Debug)]
pub struct Pass {
    /// Dealiased `dW/dF`; absent when not requested.
    pub stress: Option<MatrixField>,
    /// Dealiased `dW/dphi`.
    pub dphi: ScalarField,
    /// Grid quadrature of `W` over the box.
    pub w_integral: f64,
    /// Minimum of `det(I + grad w)` over the nodes.
    pub min_det: f64,
    /// Node with the largest `|grad w| + |phi|`, as `(phi, F)`.
    pub stiffest: (f64, [[f64; 3]; 3]),
}

const NOUT: usize = 12;

/// Evaluates `W`, `dW/dphi` and optionally `dW/dF` at every node from the
/// physical samples of `phi` and `grad w`.
pub fn evaluate(
    space: &Arc<Space>,
    model: &DensityModel,
    phi: &[f64],
    grad_w: &[Vec<f64>],
    want_stress: bool,
) -> Result<Pass> {
    assert_eq!(grad_w.len(), 9);
    let mut inputs: Vec<&[f64]> = Vec::with_capacity(10);
    inputs.push(phi);
    inputs.extend(grad_w.iter().map(|g| g.as_slice()));
    let outs = space.map_nodes(&inputs, NOUT, |x, o| {
        let f = [
            [1.0 + x[1], x[2], x[3]],
            [x[4], 1.0 + x[5], x[6]],
            [x[7], x[8], 1.0 + x[9]],
        ];
        let fm = Mat3::<f64>(f);
        let det = fm.det();
        if !(det > 0.0) {
            return Err(Error::OutOfDomain { det });
        }
        let r = model.response(&x[0], &fm)?;
        if !r.w.is_finite() || !r.d_phi.is_finite() {
            return Err(Error::OutOfDomain { det });
        }
        for i in 0..3 {
            for j in 0..3 {
                o[3 * i + j] = r.d_f.0[i][j];
            }
        }
        o[9] = r.d_phi;
        o[10] = r.w;
        o[11] = det;
        Ok(())
    })?;

    let g = space.grid();
    let cell = g.spacing().powi(3);
    let w_integral = outs[10].iter().sum::<f64>() * cell;
    let min_det = outs[11].iter().copied().fold(f64::INFINITY, f64::min);

    let mut best = 0;
    let mut best_size = -1.0;
    for p in 0..phi.len() {
        let s = phi[p].abs() + grad_w.iter().map(|c| c[p] * c[p]).sum::<f64>().sqrt();
        if s > best_size {
            best_size = s;
            best = p;
        }
    }
    let mut f = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            f[i][j] = grad_w[3 * i + j][best] + if i == j { 1.0 } else { 0.0 };
        }
    }

    let mut outs = outs;
    let dphi = ScalarField::from_physical_dealiased(space, &outs[9..10]);
    let stress = if want_stress {
        outs.truncate(9);
        Some(MatrixField::from_physical_dealiased(space, &outs))
    } else {
        None
    };
    Ok(Pass {
        stress,
        dphi,
        w_integral,
        min_det,
        stiffest: (phi[best], f),
    })
}

/// Convenience: pass at the fields `(phi, w)`.
pub fn evaluate_fields(model: &DensityModel, phi: &ScalarField, w: &VectorField, want_stress: bool) -> Result<Pass> {
    let space = phi.space().clone();
    let phys = space.inverse(phi.component(0));
    let grad = grad_physical(w);
    evaluate(&space, model, &phys, &grad, want_stress)
}
