//! Time integration of the dynamic and quasi-static systems.

mod dynamic;
mod newton;
mod pass;
mod quasi;
mod state;
mod symbols;

pub use dynamic::{
    diffusion_rhs, momentum_rhs, run_dynamic, stable_dt, wave_speed2_at, DynamicConfig, DynamicSolver, RecordOptions, RunStatus,
    TrajectorySummary,
};
pub use newton::{elliptic_residual, newton_refine, NewtonOptions, NewtonReport};
pub use pass::{evaluate, evaluate_fields, grad_physical, Pass};
pub use quasi::{
    advance_quasistatic, initial_equilibrium, residual_ab, run_quasistatic, PicardReport,
    QuasiConfig, StepLog,
};
pub use state::{Deformed, DynamicState, QuasiState};
pub use symbols::{acoustic, assemble_symbols, max_wave_speed2, LinearizedSymbols};
