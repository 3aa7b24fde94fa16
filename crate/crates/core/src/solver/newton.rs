use num_complex::Complex64;

use super::pass::{evaluate_fields, grad_physical};
use super::state::QuasiState;
use super::symbols::LinearizedSymbols;
use crate::energy::DensityModel;
use crate::error::{Error, Result};
use crate::spectral::{divergence_rowwise, MatrixField, Space, VectorField};

/// Controls of [`newton_refine`].
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOptions {
    /// Target `L^2` norm of the elliptic residual, floored at `100 eps_mach sqrt|Omega|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative tolerance of the inner conjugate-gradient solve.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Keep every Newton iterate in the report.
    pub keep_iterates: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_iter: 20,
            cg_tol: 1e-12,
            cg_max_iter: 400,
            keep_iterates: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Residual norms, starting with the initial one.
    pub residuals: Vec<f64>,
    pub cg_iterations: Vec<usize>,
    pub iterates: Vec<VectorField>,
}

fn residual(state: &QuasiState, model: &DensityModel, forcing: Option<&VectorField>) -> Result<VectorField> {
    let pass = evaluate_fields(model, &state.phi, &state.w, true)?;
    let mut r = divergence_rowwise(pass.stress.as_ref().expect("stress requested"));
    if let Some(f) = forcing {
        r = r.add(f);
    }
    Ok(r)
}

/// `L^2` norm of `div dW/dF` at a state.
pub fn elliptic_residual(state: &QuasiState, model: &DensityModel) -> Result<f64> {
    Ok(residual(state, model, None)?.norm_l2())
}

struct Tangent {
    space: std::sync::Arc<Space>,
    c: Vec<Vec<f64>>,
}

impl Tangent {
    fn at(state: &QuasiState, model: &DensityModel) -> Result<Self> {
        let space = state.space().clone();
        let phys = space.inverse(state.phi.component(0));
        let grad = grad_physical(&state.w);
        let mut inputs: Vec<&[f64]> = vec![&phys];
        inputs.extend(grad.iter().map(|g| g.as_slice()));
        let c = space.map_nodes(&inputs, 81, |x, o| {
            let f = [
                [1.0 + x[1], x[2], x[3]],
                [x[4], 1.0 + x[5], x[6]],
                [x[7], x[8], 1.0 + x[9]],
            ];
            let t = model.elastic_tangent(x[0], &f)?;
            for p in 0..9 {
                o[9 * p..9 * p + 9].copy_from_slice(&t[p]);
            }
            Ok::<(), Error>(())
        })?;
        Ok(Tangent { space, c })
    }

    /// `K d = -div(C : grad d)`.
    fn apply(&self, d: &VectorField) -> VectorField {
        let grad = grad_physical(d);
        let np = grad[0].len();
        let mut stress = vec![vec![0.0; np]; 9];
        for (p, s) in stress.iter_mut().enumerate() {
            for (x, sx) in s.iter_mut().enumerate() {
                let mut acc = 0.0;
                for q in 0..9 {
                    acc += self.c[9 * p + q][x] * grad[q][x];
                }
                *sx = acc;
            }
        }
        let m = MatrixField::from_physical_dealiased(&self.space, &stress);
        let mut out = divergence_rowwise(&m).scaled(-1.0);
        out.symmetrize();
        out
    }
}

fn precondition(symbols: &LinearizedSymbols, r: &VectorField) -> VectorField {
    symbols.apply_inverse(r)
}

fn pcg(
    k: &Tangent,
    symbols: &LinearizedSymbols,
    rhs: &VectorField,
    rtol: f64,
    max_iter: usize,
) -> (VectorField, usize) {
    let mut x = VectorField::zeros(rhs.space());
    let mut r = rhs.clone();
    // the constant mode and the anti-Hermitian round-off of the transforms
    // lie in the kernel of K and are ignored
    for c in 0..3 {
        r.component_mut(c)[0] = Complex64::new(0.0, 0.0);
    }
    r.symmetrize();
    let r0 = r.norm_l2();
    if r0 == 0.0 {
        return (x, 0);
    }
    let mut z = precondition(symbols, &r);
    let mut p = z.clone();
    let mut rz = r.inner(&z);
    for it in 1..=max_iter {
        let kp = k.apply(&p);
        let pkp = p.inner(&kp);
        if !(pkp > 0.0) {
            return (x, it);
        }
        let alpha = rz / pkp;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &kp);
        if r.norm_l2() <= rtol * r0 {
            return (x, it);
        }
        z = precondition(symbols, &r);
        let rz_new = r.inner(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        let mut next = z.clone();
        next.axpy(beta, &p);
        p = next;
    }
    (x, max_iter)
}

/// Newton iteration on `div dW/dF(phi, I + grad w) + forcing = 0` in `w`
/// at fixed `phi`. Each linear solve is conjugate gradients on the pointwise
/// tangent, preconditioned by the constant-coefficient inverse `A(k)^{-1}`.
pub fn newton_refine(
    state: &QuasiState,
    model: &DensityModel,
    symbols: &LinearizedSymbols,
    opts: &NewtonOptions,
    forcing: Option<&VectorField>,
) -> Result<(QuasiState, NewtonReport)> {
    let mut s = state.clone();
    let mut r = residual(&s, model, forcing)?;
    let mut norm = r.norm_l2();
    let mut report = NewtonReport {
        iterations: 0,
        residuals: vec![norm],
        cg_iterations: Vec::new(),
        iterates: Vec::new(),
    };
    if opts.keep_iterates {
        report.iterates.push(s.w.clone());
    }
    let initial = norm;
    let tol = opts.tol.max(100.0 * f64::EPSILON * s.space().grid().volume().sqrt());
    for it in 1..=opts.max_iter {
        if norm <= tol {
            return Ok((s, report));
        }
        let tangent = Tangent::at(&s, model)?;
        let (delta, cg) = pcg(&tangent, symbols, &r, opts.cg_tol, opts.cg_max_iter);
        s.w.axpy(1.0, &delta);
        r = match residual(&s, model, forcing) {
            Ok(r) => r,
            Err(Error::OutOfDomain { .. }) => {
                return Err(Error::NewtonDiverged {
                    iterations: it,
                    residual: f64::INFINITY,
                })
            }
            Err(e) => return Err(e),
        };
        norm = r.norm_l2();
        report.iterations = it;
        report.residuals.push(norm);
        report.cg_iterations.push(cg);
        if opts.keep_iterates {
            report.iterates.push(s.w.clone());
        }
        if !norm.is_finite() || norm > 1e3 * initial.max(opts.tol) {
            return Err(Error::NewtonDiverged {
                iterations: it,
                residual: norm,
            });
        }
    }
    if norm <= tol {
        return Ok((s, report));
    }
    Err(Error::NewtonDiverged {
        iterations: opts.max_iter,
        residual: norm,
    })
}
