use std::sync::Arc;

use num_complex::Complex64;

use super::{Field, MatrixField, ScalarField, Space, VectorField};
use crate::error::{Error, Result};

/// Fields with a spectral gradient.
pub trait Gradient {
    type Output;
    fn gradient(&self) -> Self::Output;
}

impl Gradient for ScalarField {
    type Output = VectorField;

    fn gradient(&self) -> VectorField {
        let space = self.space().clone();
        let mut out = VectorField::zeros(&space);
        let src = self.component(0);
        for d in 0..3 {
            let dst = out.component_mut(d);
            for (idx, (o, s)) in dst.iter_mut().zip(src).enumerate() {
                *o = s * Complex64::new(0.0, space.kd(idx)[d]);
            }
        }
        out
    }
}

impl Gradient for VectorField {
    type Output = MatrixField;

    /// Row `i` of the result is the gradient of component `i`.
    fn gradient(&self) -> MatrixField {
        let space = self.space().clone();
        let mut out = MatrixField::zeros(&space);
        for i in 0..3 {
            for j in 0..3 {
                let src = self.component(i).to_vec();
                let dst = out.component_mut(3 * i + j);
                for (idx, (o, s)) in dst.iter_mut().zip(&src).enumerate() {
                    *o = s * Complex64::new(0.0, space.kd(idx)[j]);
                }
            }
        }
        out
    }
}

pub fn gradient<F: Gradient>(f: &F) -> F::Output {
    f.gradient()
}

/// `(div M)_i = sum_j d_j M_ij`.
pub fn divergence_rowwise(m: &MatrixField) -> VectorField {
    let space = m.space().clone();
    let mut out = VectorField::zeros(&space);
    for i in 0..3 {
        let dst = out.component_mut(i);
        for j in 0..3 {
            let src = m.component(3 * i + j);
            for (idx, (o, s)) in dst.iter_mut().zip(src).enumerate() {
                *o += s * Complex64::new(0.0, space.kd(idx)[j]);
            }
        }
    }
    out
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let space = v.space().clone();
    let mut out = ScalarField::zeros(&space);
    let dst = out.component_mut(0);
    for j in 0..3 {
        let src = v.component(j);
        for (idx, (o, s)) in dst.iter_mut().zip(src).enumerate() {
            *o += s * Complex64::new(0.0, space.kd(idx)[j]);
        }
    }
    out
}

pub fn laplacian<const C: usize>(f: &Field<C>) -> Field<C> {
    let space = f.space().clone();
    let m = space.len();
    let mut out = f.clone();
    for (i, c) in out.coefficients_mut().iter_mut().enumerate() {
        *c *= -space.kd2(i % m);
    }
    out
}

/// Mean-zero `psi` with `-Laplacian psi = f - mean(f)`. The default mean
/// tolerance is `1e-12` times the root-mean-square of `f`.
pub fn inverse_laplacian(f: &ScalarField, mean_tol: Option<f64>) -> Result<ScalarField> {
    let tol = mean_tol.unwrap_or(1e-12 * f.rms());
    let mean = f.mean()[0];
    if mean.abs() > tol {
        return Err(Error::NonZeroMean { mean, tol });
    }
    let space = f.space().clone();
    let mut out = f.clone();
    for (i, c) in out.coefficients_mut().iter_mut().enumerate() {
        let k2 = space.kd2(i);
        *c = if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { *c / k2 };
    }
    Ok(out)
}

/// `H^k` norm with Fourier weights `(1 + |kappa|^2)^k`, normalized so that
/// `k = 0` gives the `L^2` norm over the box.
pub fn sobolev_norm<const C: usize>(f: &Field<C>, k: u32) -> f64 {
    sobolev_norm2(f, k).sqrt()
}

pub fn sobolev_norm2<const C: usize>(f: &Field<C>, k: u32) -> f64 {
    derivative_norm2(f, 0, k)
}

/// Squared `H^k` norm of the `m`-th gradient tensor of `f`, i.e. weights
/// `|kappa|^(2m) (1 + |kappa|^2)^k`.
pub fn derivative_norm2<const C: usize>(f: &Field<C>, m: u32, k: u32) -> f64 {
    let space = f.space().clone();
    let vol = space.grid().volume();
    f.weighted_sum(|idx| {
        let kk = space.kk(idx);
        kk.powi(m as i32) * (1.0 + kk).powi(k as i32)
    }) * vol
}

/// Galerkin projection: zeroes modes with max-norm index above `n_modes`.
pub fn truncate_modes<const C: usize>(f: &Field<C>, n_modes: usize) -> Result<Field<C>> {
    let half = f.grid().n() / 2;
    if n_modes < 1 || n_modes > half {
        return Err(Error::InvalidArgument(format!(
            "truncation index must lie in 1..={half}, got {n_modes}"
        )));
    }
    let mut out = f.clone();
    truncate_in_place(&mut out, n_modes);
    Ok(out)
}

pub(crate) fn truncate_in_place<const C: usize>(f: &mut Field<C>, n_modes: usize) {
    let space = f.space().clone();
    let m = space.len();
    for (i, c) in f.coefficients_mut().iter_mut().enumerate() {
        if space.band(i % m) > n_modes {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Physical-space nonlinearity: evaluates `f` at every node on the
/// concatenated component values of `inputs`, transforms back and dealiases.
pub fn pointwise_map<const OUT: usize, E, F>(
    space: &Arc<Space>,
    inputs: &[&[Vec<f64>]],
    f: F,
) -> Result<Field<OUT>, E>
where
    E: Send,
    F: Fn(&[f64]) -> Result<[f64; OUT], E> + Sync,
{
    let flat: Vec<&[f64]> = inputs.iter().flat_map(|f| f.iter().map(|c| c.as_slice())).collect();
    let outs = space.map_nodes(&flat, OUT, |vals, out| {
        out.copy_from_slice(&f(vals)?);
        Ok(())
    })?;
    Ok(Field::from_physical_dealiased(space, &outs))
}

/// Convenience wrapper of [`pointwise_map`] over fields of one shape.
pub fn pointwise_map_fields<const IN: usize, const OUT: usize, E, F>(
    inputs: &[&Field<IN>],
    f: F,
) -> Result<Field<OUT>, E>
where
    E: Send + From<Error>,
    F: Fn(&[f64]) -> Result<[f64; OUT], E> + Sync,
{
    let first = inputs.first().ok_or_else(|| Error::InvalidArgument("no inputs".into()))?;
    for x in inputs {
        first.check_grid(*x)?;
    }
    let phys: Vec<Vec<Vec<f64>>> = inputs.iter().map(|x| x.to_physical()).collect();
    let refs: Vec<&[Vec<f64>]> = phys.iter().map(|p| p.as_slice()).collect();
    pointwise_map(first.space(), &refs, f)
}
