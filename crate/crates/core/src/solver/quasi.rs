use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dynamic::{RecordOptions, RunStatus, TrajectorySummary};
use super::pass::{evaluate_fields, grad_physical};
use super::state::QuasiState;
use super::symbols::LinearizedSymbols;
use crate::ad::Mat3;
use crate::diagnostics::{record_quasi, DiagnosticsRecord, XiAccumulator};
use crate::energy::DensityModel;
use crate::error::{Error, Result};
use crate::spectral::{derivative_norm2, MatrixField, ScalarField, VectorField};

/// Parameters of the quasi-static integrator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasiConfig {
    pub dt: f64,
    pub t_end: f64,
    pub picard_tol: f64,
    pub max_iter: usize,
}

impl Default for QuasiConfig {
    fn default() -> Self {
        QuasiConfig {
            dt: 1e-3,
            t_end: 1.0,
            picard_tol: 1e-10,
            max_iter: 50,
        }
    }
}

impl QuasiConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.picard_tol > 0.0) {
            return bad(format!("picard_tol must be positive, got {}", self.picard_tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Outcome of one fixed-point solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PicardReport {
    pub iterations: usize,
    /// Ratio of the last two successive distances (NaN after one iterate).
    pub contraction: f64,
    /// Final relative distance between iterates.
    pub distance: f64,
}

/// One line of the per-step fixed-point log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepLog {
    pub step: usize,
    pub t: f64,
    pub iterations: usize,
    pub contraction: f64,
    pub distance: f64,
    pub phi_l2: f64,
    pub phi_mean: f64,
}

/// Nonlinear remainders at a state:
/// `A = C : grad w + G phi - dW/dF` and `B = dW/dphi - a phi - G : grad w`.
pub fn residual_ab(
    phi: &ScalarField,
    w: &VectorField,
    model: &DensityModel,
    symbols: &LinearizedSymbols,
) -> Result<(MatrixField, ScalarField)> {
    phi.check_grid(w)?;
    let space = phi.space().clone();
    let phys = space.inverse(phi.component(0));
    let grad = grad_physical(w);
    let mut inputs: Vec<&[f64]> = vec![&phys];
    inputs.extend(grad.iter().map(|g| g.as_slice()));
    let (c, g, a) = (&symbols.c, &symbols.g, symbols.a);
    let outs = space.map_nodes(&inputs, 10, |x, o| {
        let f = Mat3::<f64>([
            [1.0 + x[1], x[2], x[3]],
            [x[4], 1.0 + x[5], x[6]],
            [x[7], x[8], 1.0 + x[9]],
        ]);
        let det = f.det();
        if !(det > 0.0) {
            return Err(Error::OutOfDomain { det });
        }
        let r = model.response(&x[0], &f)?;
        let mut gdw = 0.0;
        for p in 0..9 {
            let lin: f64 = (0..9).map(|q| c[p][q] * x[1 + q]).sum();
            o[p] = lin + g[p / 3][p % 3] * x[0] - r.d_f.0[p / 3][p % 3];
            gdw += g[p / 3][p % 3] * x[1 + p];
        }
        o[9] = r.d_phi - a * x[0] - gdw;
        if o.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfDomain { det });
        }
        Ok(())
    })?;
    let am = MatrixField::from_physical_dealiased(&space, &outs[..9]);
    let bm = ScalarField::from_physical_dealiased(&space, &outs[9..]);
    Ok((am, bm))
}

/// Absolute distance below which successive iterates differ only by the
/// rounding of `I + grad w` at the nodes.
fn roundoff_floor(space: &crate::spectral::Space) -> f64 {
    100.0 * f64::EPSILON * space.grid().volume().sqrt()
}

/// `H^2 x H^1` distance of `(phi, grad w)` between iterates, relative to
/// the new iterate, and whether it is below `tol` or the rounding floor.
fn picard_distance(
    phi: &ScalarField,
    w: &VectorField,
    phi_old: &ScalarField,
    w_old: &VectorField,
    tol: f64,
) -> (f64, bool) {
    let dphi = phi.sub(phi_old);
    let dw = w.sub(w_old);
    let dist = (derivative_norm2(&dphi, 0, 2) + derivative_norm2(&dw, 1, 1)).sqrt();
    let scale = (derivative_norm2(phi, 0, 2) + derivative_norm2(w, 1, 1)).sqrt();
    let rel = if scale > 0.0 { dist / scale } else { dist };
    (rel, dist <= (tol * scale).max(roundoff_floor(phi.space())))
}

/// Solves `div dW/dF(phi0, I + grad w) = 0` for `w` by fixed-point
/// iteration on the linearization.
pub fn initial_equilibrium(
    phi0: &ScalarField,
    model: &DensityModel,
    symbols: &LinearizedSymbols,
    tol: f64,
    max_iter: usize,
) -> Result<QuasiState> {
    let space = phi0.space().clone();
    let mut w = VectorField::zeros(&space);
    let mut prev = f64::NAN;
    for it in 1..=max_iter {
        let (a, _) = residual_ab(phi0, &w, model, symbols)?;
        let next = symbols.solve_linear_elliptic(&a, phi0);
        let (rel, done) = picard_distance(phi0, &next, phi0, &w, tol);
        w = next;
        if done {
            return Ok(QuasiState {
                w,
                phi: phi0.clone(),
                t: 0.0,
            });
        }
        let factor = rel / prev;
        if it >= 3 && factor >= 1.0 {
            return Err(Error::NoContraction { iterations: it, factor });
        }
        prev = rel;
    }
    Err(Error::NoContraction {
        iterations: max_iter,
        factor: f64::NAN,
    })
}

/// One time step of the quasi-static system. The species equation is
/// integrated exactly in time for the frozen nonlinear remainders
/// (exponential integrator), the displacement is the linear elliptic solve,
/// and both are iterated to a fixed point.
pub fn advance_quasistatic(
    state: &QuasiState,
    dt: f64,
    model: &DensityModel,
    symbols: &LinearizedSymbols,
    picard_tol: f64,
    max_iter: usize,
) -> Result<(QuasiState, PicardReport)> {
    let space = state.space().clone();
    let m = space.len();
    let mut decay = vec![1.0; m];
    let mut gain = vec![0.0; m];
    for idx in 0..m {
        let k2 = space.kd2(idx);
        if k2 == 0.0 {
            continue;
        }
        let lambda = k2 * (symbols.a - symbols.schur(idx));
        if !(lambda > 0.0) {
            return Err(Error::NotElliptic {
                k: space.kd(idx),
                eigenvalue: lambda,
            });
        }
        decay[idx] = (-lambda * dt).exp();
        gain[idx] = -k2 * (-(-lambda * dt).exp_m1() / lambda);
    }

    let mut phi_bar = state.phi.clone();
    let mut w_bar = state.w.clone();
    let mut prev = f64::NAN;
    let mut factor = f64::NAN;
    for it in 1..=max_iter {
        let (a_rhs, b_rhs) = residual_ab(&phi_bar, &w_bar, model, symbols)?;
        let mut phi = state.phi.clone();
        {
            let ar = a_rhs.coefficients();
            let br = b_rhs.component(0);
            let dst = phi.component_mut(0);
            for idx in 0..m {
                if space.kd2(idx) == 0.0 {
                    continue;
                }
                let k = space.kd(idx);
                let inv = symbols.acoustic_inv(idx);
                let gk = symbols.gk(idx);
                let mut ak = [Complex64::new(0.0, 0.0); 3];
                for (i, v) in ak.iter_mut().enumerate() {
                    for j in 0..3 {
                        *v += ar[(3 * i + j) * m + idx] * k[j];
                    }
                }
                let mut f = br[idx];
                for i in 0..3 {
                    for l in 0..3 {
                        f += ak[l] * (gk[i] * inv[i][l]);
                    }
                }
                dst[idx] = dst[idx] * decay[idx] + f * gain[idx];
            }
        }
        phi.dealias();
        let w = symbols.solve_linear_elliptic(&a_rhs, &phi);
        let (rel, done) = picard_distance(&phi, &w, &phi_bar, &w_bar, picard_tol);
        if prev.is_finite() && prev > 0.0 {
            factor = rel / prev;
        }
        phi_bar = phi;
        w_bar = w;
        if !rel.is_finite() {
            return Err(Error::NoContraction { iterations: it, factor });
        }
        if done {
            return Ok((
                QuasiState {
                    w: w_bar,
                    phi: phi_bar,
                    t: state.t + dt,
                },
                PicardReport {
                    iterations: it,
                    contraction: factor,
                    distance: rel,
                },
            ));
        }
        if it >= 3 && factor >= 1.0 {
            return Err(Error::NoContraction { iterations: it, factor });
        }
        prev = rel;
    }
    Err(Error::NoContraction {
        iterations: max_iter,
        factor,
    })
}

/// Integrates the quasi-static system to `t_end` from a state whose
/// displacement is in equilibrium.
pub fn run_quasistatic(
    config: &QuasiConfig,
    model: &DensityModel,
    symbols: &LinearizedSymbols,
    initial: QuasiState,
    opts: RecordOptions,
    sink: &mut dyn FnMut(&DiagnosticsRecord),
) -> Result<TrajectorySummary<QuasiState>> {
    config.validate()?;
    model.validate()?;
    if opts.stride == 0 {
        return Err(Error::InvalidArgument("record stride must be positive".into()));
    }
    initial.phi.check_grid(&initial.w)?;
    if initial.space().grid() != symbols.space().grid() {
        return Err(Error::GridMismatch);
    }
    let nsteps = config.steps();
    let mut xi = XiAccumulator::new();
    xi.accumulate(&initial);
    let mut records = Vec::new();
    let mut take = |s: &QuasiState, iters: Option<usize>, xi: f64, records: &mut Vec<DiagnosticsRecord>| -> Result<()> {
        let pass = evaluate_fields(model, &s.phi, &s.w, false)?;
        let big = opts.big_stride != 0 && records.len() % opts.big_stride == 0;
        let r = record_quasi(s, &pass, model, Some(xi), iters, big)?;
        sink(&r);
        records.push(r);
        Ok(())
    };
    take(&initial, None, xi.value(), &mut records)?;
    let mut state = initial;
    let mut picard = Vec::with_capacity(nsteps);
    let mut status = RunStatus::Completed;
    let mut done = 0;
    for step in 1..=nsteps {
        match advance_quasistatic(&state, config.dt, model, symbols, config.picard_tol, config.max_iter) {
            Ok((next, rep)) => {
                state = next;
                let x = xi.accumulate(&state);
                picard.push(StepLog {
                    step,
                    t: state.t,
                    iterations: rep.iterations,
                    contraction: rep.contraction,
                    distance: rep.distance,
                    phi_l2: state.phi.norm_l2(),
                    phi_mean: state.phi.mean()[0],
                });
                done = step;
                if step % opts.stride == 0 || step == nsteps {
                    take(&state, Some(rep.iterations), x, &mut records)?;
                }
            }
            Err(e) => {
                status = RunStatus::Failed { t: state.t, error: e };
                break;
            }
        }
    }
    Ok(TrajectorySummary {
        status,
        final_state: state,
        steps: done,
        records,
        picard,
    })
}
