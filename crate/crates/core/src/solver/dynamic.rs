use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::quasi::StepLog;
use super::pass::{evaluate, evaluate_fields, grad_physical, Pass};
use super::state::DynamicState;
use super::symbols::max_wave_speed2;
use crate::diagnostics::{record_dynamic, DiagnosticsRecord};
use crate::energy::{derivatives, DensityModel, M3};
use crate::error::{Error, Result};
use crate::spectral::{divergence_rowwise, laplacian, truncate_in_place, ScalarField, Space, VectorField};

const IDENTITY: M3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Parameters of the dynamic integrator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicConfig {
    pub dt: f64,
    /// Artificial viscosity-like regularization `eps * lap u`.
    pub eps: f64,
    /// Galerkin truncation index applied after every stage.
    pub n_galerkin: Option<usize>,
    /// Implicit splitting coefficient of the diffusion; defaults to
    /// `d_phi^2 W(0, I)`.
    pub a_split: Option<f64>,
    pub cfl_safety: f64,
    pub t_end: f64,
    /// Largest accepted per-step growth factor of the state norm.
    pub growth_limit: f64,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig {
            dt: 1e-3,
            eps: 0.0,
            n_galerkin: None,
            a_split: None,
            cfl_safety: 0.5,
            t_end: 1.0,
            growth_limit: 2.0,
        }
    }
}

impl DynamicConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be non-negative, got {}", self.eps));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.growth_limit > 1.0) {
            return bad(format!("growth_limit must exceed 1, got {}", self.growth_limit));
        }
        if let Some(a) = self.a_split {
            if !(a >= 0.0 && a.is_finite()) {
                return bad(format!("a_split must be non-negative, got {a}"));
            }
        }
        if let Some(ng) = self.n_galerkin {
            if ng < 1 || ng > n / 2 {
                return bad(format!("n_galerkin must lie in 1..={}, got {ng}", n / 2));
            }
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Squared largest wave speed of the tangent at one point.
pub fn wave_speed2_at(model: &DensityModel, phi: f64, f: &M3) -> Result<f64> {
    Ok(max_wave_speed2(&model.elastic_tangent(phi, f)?))
}

fn stable_dt_from(space: &Space, model: &DensityModel, pass: &Pass, eps: f64) -> Result<f64> {
    let c_eq = wave_speed2_at(model, 0.0, &IDENTITY)?;
    let (phi, f) = pass.stiffest;
    let c_node = wave_speed2_at(model, phi, &f)?;
    let c2 = c_eq.max(c_node) + eps;
    Ok(space.grid().spacing() / c2.sqrt())
}

/// Grid-spacing over the largest wave speed, `h / c_max`, where the speed
/// is sampled at equilibrium and at the most strained node of the state.
pub fn stable_dt(state: &DynamicState, model: &DensityModel, eps: f64) -> Result<f64> {
    let pass = evaluate_fields(model, &state.phi, &state.w, false)?;
    stable_dt_from(state.space(), model, &pass, eps)
}

/// `div dW/dF + eps lap w`.
pub fn momentum_rhs(state: &DynamicState, model: &DensityModel, eps: f64) -> Result<VectorField> {
    let pass = evaluate_fields(model, &state.phi, &state.w, true)?;
    Ok(force(&pass, &state.w, eps))
}

/// `lap dW/dphi`.
pub fn diffusion_rhs(phi: &ScalarField, w: &VectorField, model: &DensityModel) -> Result<ScalarField> {
    let pass = evaluate_fields(model, phi, w, false)?;
    Ok(laplacian(&pass.dphi))
}

fn force(pass: &Pass, w: &VectorField, eps: f64) -> VectorField {
    let mut f = divergence_rowwise(pass.stress.as_ref().expect("pass without stress"));
    if eps != 0.0 {
        f.axpy(eps, &laplacian(w));
    }
    f
}

fn state_norm(s: &DynamicState) -> f64 {
    let gw = crate::spectral::derivative_norm2(&s.w, 1, 0);
    (s.v.inner(&s.v) + gw + s.phi.inner(&s.phi)).sqrt()
}

/// Velocity Verlet for `(w, v)` with an IMEX step for `phi`; the force of
/// the current state is cached between steps.
pub struct DynamicSolver<'m> {
    model: &'m DensityModel,
    config: DynamicConfig,
    a_split: f64,
    state: DynamicState,
    phi_phys: Vec<f64>,
    pass: Pass,
    stable: f64,
}

impl<'m> DynamicSolver<'m> {
    pub fn new(model: &'m DensityModel, config: DynamicConfig, mut state: DynamicState) -> Result<Self> {
        model.validate()?;
        config.validate(state.space().n())?;
        state.w.check_grid(&state.phi)?;
        state.v.check_grid(&state.phi)?;
        let a_split = match config.a_split {
            Some(a) => a,
            None => derivatives(model, 0.0, &IDENTITY, 2)?.d2(0, 0).max(0.0),
        };
        if let Some(ng) = config.n_galerkin {
            truncate_in_place(&mut state.w, ng);
            truncate_in_place(&mut state.v, ng);
            truncate_in_place(&mut state.phi, ng);
        }
        let space = state.space().clone();
        let phi_phys = space.inverse(state.phi.component(0));
        let pass = evaluate(&space, model, &phi_phys, &grad_physical(&state.w), true)?;
        let stable = stable_dt_from(&space, model, &pass, config.eps)?;
        Ok(DynamicSolver {
            model,
            config,
            a_split,
            state,
            phi_phys,
            pass,
            stable,
        })
    }

    pub fn state(&self) -> &DynamicState {
        &self.state
    }

    pub fn into_state(self) -> DynamicState {
        self.state
    }

    pub fn config(&self) -> &DynamicConfig {
        &self.config
    }

    pub fn model(&self) -> &DensityModel {
        self.model
    }

    /// Pass at the current state.
    pub fn pass(&self) -> &Pass {
        &self.pass
    }

    /// `h / c_max` at the current state.
    pub fn stable_dt(&self) -> f64 {
        self.stable
    }

    fn truncate<const C: usize>(&self, f: &mut crate::spectral::Field<C>) {
        if let Some(ng) = self.config.n_galerkin {
            truncate_in_place(f, ng);
        }
    }

    /// Advances one step of size `dt`.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.config.dt;
        let eps = self.config.eps;
        let t = self.state.t;
        if dt > self.config.cfl_safety * self.stable {
            return Err(Error::UnstableStep {
                t,
                reason: format!(
                    "dt = {dt} exceeds cfl_safety * h / c_max = {}",
                    self.config.cfl_safety * self.stable
                ),
            });
        }
        let space: Arc<Space> = self.state.space().clone();
        let before = state_norm(&self.state);

        let mut v = self.state.v.clone();
        v.axpy(0.5 * dt, &force(&self.pass, &self.state.w, eps));
        self.truncate(&mut v);
        let mut w = self.state.w.clone();
        w.axpy(dt, &v);
        self.truncate(&mut w);

        let grad = grad_physical(&w);
        let mid = evaluate(&space, self.model, &self.phi_phys, &grad, false)?;
        let a = self.a_split;
        let mut phi = self.state.phi.clone();
        {
            let g = mid.dphi.component(0);
            for (idx, p) in phi.component_mut(0).iter_mut().enumerate() {
                let k2 = space.kd2(idx);
                if k2 == 0.0 {
                    continue;
                }
                *p = (*p * (1.0 + dt * a * k2) - g[idx] * (dt * k2)) / (1.0 + dt * a * k2);
            }
        }
        self.truncate(&mut phi);
        let phi_phys = space.inverse(phi.component(0));
        let pass = evaluate(&space, self.model, &phi_phys, &grad, true)?;
        v.axpy(0.5 * dt, &force(&pass, &w, eps));
        self.truncate(&mut v);

        let next = DynamicState { w, v, phi, t: t + dt };
        let after = state_norm(&next);
        if !after.is_finite() {
            return Err(Error::UnstableStep {
                t,
                reason: "non-finite state".into(),
            });
        }
        if before > 0.0 && after > self.config.growth_limit * before {
            return Err(Error::UnstableStep {
                t,
                reason: format!("state norm grew by {:.3e} in one step", after / before),
            });
        }
        if !(pass.min_det > 0.0) {
            return Err(Error::OutOfDomain { det: pass.min_det });
        }
        self.stable = stable_dt_from(&space, self.model, &pass, eps)?;
        self.state = next;
        self.phi_phys = phi_phys;
        self.pass = pass;
        Ok(())
    }
}

/// Sampling of diagnostics along a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecordOptions {
    /// Steps between records.
    pub stride: usize,
    /// Records between evaluations of the a-priori energy (0 disables it).
    pub big_stride: usize,
}

impl Default for RecordOptions {
    fn default() -> Self {
        RecordOptions {
            stride: 10,
            big_stride: 10,
        }
    }
}

impl RecordOptions {
    fn wants_big(&self, record_index: usize) -> bool {
        self.big_stride != 0 && record_index % self.big_stride == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    Failed { t: f64, error: Error },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

/// Result of a run: status, last accepted state and the records taken.
#[derive(Clone, Debug)]
pub struct TrajectorySummary<S> {
    pub status: RunStatus,
    pub final_state: S,
    pub steps: usize,
    pub records: Vec<DiagnosticsRecord>,
    /// Per-step fixed-point log (quasi-static runs only).
    pub picard: Vec<StepLog>,
}

/// Integrates to `t_end`, recording every `stride` steps and at the end.
/// Solver failures end the run early and are reported in the status.
pub fn run_dynamic(
    config: &DynamicConfig,
    model: &DensityModel,
    initial: DynamicState,
    opts: RecordOptions,
    sink: &mut dyn FnMut(&DiagnosticsRecord),
) -> Result<TrajectorySummary<DynamicState>> {
    if opts.stride == 0 {
        return Err(Error::InvalidArgument("record stride must be positive".into()));
    }
    let mut solver = DynamicSolver::new(model, config.clone(), initial)?;
    let nsteps = config.steps();
    let mut records = Vec::new();
    let mut take = |solver: &DynamicSolver, records: &mut Vec<DiagnosticsRecord>| -> Result<()> {
        let big = opts.wants_big(records.len());
        let r = record_dynamic(solver.state(), solver.pass(), model, config.eps, big)?;
        sink(&r);
        records.push(r);
        Ok(())
    };
    take(&solver, &mut records)?;
    let mut status = RunStatus::Completed;
    let mut done = 0;
    for step in 1..=nsteps {
        if let Err(e) = solver.step() {
            status = RunStatus::Failed {
                t: solver.state().t,
                error: e,
            };
            break;
        }
        done = step;
        if step % opts.stride == 0 || step == nsteps {
            take(&solver, &mut records)?;
        }
    }
    Ok(TrajectorySummary {
        status,
        final_state: solver.into_state(),
        steps: done,
        records,
        picard: Vec::new(),
    })
}
