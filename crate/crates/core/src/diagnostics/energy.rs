use super::record::DiagnosticsRecord;
use crate::energy::DensityModel;
use crate::error::{Error, Result};
use crate::solver::{evaluate_fields, Deformed};
use crate::spectral::{derivative_norm2, inverse_laplacian, laplacian};

/// `E0 = 1/2 int |v|^2 + int W(phi, grad u)`; the kinetic part is absent for
/// quasi-static states.
pub fn energy_e0<S: Deformed>(state: &S, model: &DensityModel) -> Result<f64> {
    let pass = evaluate_fields(model, state.species(), state.displacement(), false)?;
    let kinetic = state.velocity().map(|v| 0.5 * v.inner(v)).unwrap_or(0.0);
    Ok(kinetic + pass.w_integral)
}

/// `E0 + eps/2 int |grad w|^2`.
pub fn energy_eps<S: Deformed>(state: &S, model: &DensityModel, eps: f64) -> Result<f64> {
    Ok(energy_e0(state, model)? + 0.5 * eps * derivative_norm2(state.displacement(), 1, 0))
}

/// The dissipation `int |grad psi_t|^2` with `lap psi = phi`, computed as
/// `int |grad (lap^-1 phi_t)|^2` and as `int |grad dW/dphi|^2`.
pub fn dissipation_routes<S: Deformed>(state: &S, model: &DensityModel) -> Result<(f64, f64)> {
    let pass = evaluate_fields(model, state.species(), state.displacement(), false)?;
    let phi_t = laplacian(&pass.dphi);
    let psi_t = inverse_laplacian(&phi_t, None)?;
    Ok((derivative_norm2(&psi_t, 1, 0), derivative_norm2(&pass.dphi, 1, 0)))
}

/// Dissipation rate; both routes must agree to `1e-10` relative.
pub fn dissipation_rate<S: Deformed>(state: &S, model: &DensityModel) -> Result<f64> {
    let (a, b) = dissipation_routes(state, model)?;
    let scale = a.abs().max(b.abs());
    if (a - b).abs() > 1e-10 * scale {
        return Err(Error::InvalidArgument(format!("dissipation routes disagree: {a:e} vs {b:e}")));
    }
    Ok(a)
}

/// `max_t |E(t) + int_0^t D - E(0)|` with the trapezoid rule over the
/// record times; `with_eps` uses the regularized energy column.
pub fn energy_law_residual(records: &[DiagnosticsRecord], with_eps: bool) -> f64 {
    let energy = |r: &DiagnosticsRecord| if with_eps { r.e_eps.unwrap_or(r.e0) } else { r.e0 };
    let Some(first) = records.first() else {
        return 0.0;
    };
    let e0 = energy(first);
    let mut integral = 0.0;
    let mut worst: f64 = 0.0;
    for pair in records.windows(2) {
        integral += 0.5 * (pair[1].t - pair[0].t) * (pair[0].dissipation + pair[1].dissipation);
        worst = worst.max((energy(&pair[1]) + integral - e0).abs());
    }
    worst
}

/// `int |v|^2 + 2 W`, the normalization without the factor one half.
pub fn energy_e0_doubled<S: Deformed>(state: &S, model: &DensityModel) -> Result<f64> {
    Ok(2.0 * energy_e0(state, model)?)
}
