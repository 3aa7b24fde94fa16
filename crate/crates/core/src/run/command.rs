use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ConfigError, RunConfig};
use super::initial::{dynamic_initial, quasi_initial};
use crate::diagnostics::{energy_law_residual, twin_divergence, CsvSink, DiagnosticsRecord};
use crate::energy::{axiom_check, coercivity_check, DensityModel};
use crate::error::Error;
use crate::solver::{
    assemble_symbols, run_dynamic, run_quasistatic, DynamicConfig, DynamicSolver, DynamicState, RunStatus,
    StepLog, TrajectorySummary,
};
use crate::spectral::{sobolev_norm, Field, ScalarField, Space};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Command verbs.
#[derive(Clone, Debug, PartialEq)]
pub enum Verb {
    Simulate,
    Quasistatic,
    Twin { delta: f64 },
    VerifyDensity { axioms: bool, samples: usize },
    Convergence { levels: usize },
    GalerkinSweep { eps_list: Vec<f64>, n_list: Vec<usize> },
}

impl Verb {
    pub fn name(&self) -> &'static str {
        match self {
            Verb::Simulate => "simulate",
            Verb::Quasistatic => "quasistatic",
            Verb::Twin { .. } => "twin",
            Verb::VerifyDensity { .. } => "verify-density",
            Verb::Convergence { .. } => "convergence",
            Verb::GalerkinSweep { .. } => "galerkin-sweep",
        }
    }
}

/// Why a verb did not succeed.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Solver { t: Option<f64>, error: Error },
    Verification(String),
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Solver { .. } => EXIT_SOLVER,
            Failure::Verification(_) => EXIT_VERIFICATION,
            Failure::Other(_) => EXIT_OTHER,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Config(e) => e.to_string(),
            Failure::Solver { t: Some(t), error } => format!("solver failure at t = {t}: {error}"),
            Failure::Solver { t: None, error } => format!("solver failure: {error}"),
            Failure::Verification(m) => format!("verification failed: {m}"),
            Failure::Other(m) => m.clone(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(format!("i/o error: {e}"))
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        match error {
            Error::InvalidArgument(m) => Failure::Other(m),
            error => Failure::Solver { t: None, error },
        }
    }
}

/// Contents of `manifest.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub verb: String,
    pub status: String,
    pub exit_code: i32,
    pub failure_time: Option<f64>,
    pub message: Option<String>,
    pub wall_time_s: f64,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub config: RunConfig,
    pub results: Value,
}

/// What a finished verb reports.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub message: Option<String>,
    pub manifest: Manifest,
}

#[derive(Default)]
struct Produced {
    outputs: Vec<String>,
    results: Value,
}

/// Runs `verb` with `cfg`, writing every output and `manifest.json` below
/// `out`.
pub fn run_command(verb: &Verb, cfg: &RunConfig, out: &Path) -> Outcome {
    let start = Instant::now();
    let mut produced = Produced::default();
    let result = std::fs::create_dir_all(out)
        .map_err(Failure::from)
        .and_then(|_| write_effective_config(cfg, out, &mut produced))
        .and_then(|_| dispatch(verb, cfg, out, &mut produced));
    let (status, exit_code, failure_time, message) = match &result {
        Ok(()) => ("ok".to_string(), EXIT_OK, None, None),
        Err(f) => {
            let t = match f {
                Failure::Solver { t, .. } => *t,
                _ => None,
            };
            ("failed".to_string(), f.exit_code(), t, Some(f.message()))
        }
    };
    produced.outputs.push("manifest.json".into());
    let manifest = Manifest {
        tool: "prestrain-lab",
        version: env!("CARGO_PKG_VERSION"),
        verb: verb.name().into(),
        status,
        exit_code,
        failure_time,
        message: message.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        outputs: produced.outputs,
        config: cfg.clone(),
        results: produced.results,
    };
    let written = serde_json::to_string_pretty(&manifest)
        .map_err(|e| std::io::Error::other(e.to_string()))
        .and_then(|s| std::fs::write(out.join("manifest.json"), s + "\n"));
    let (exit_code, message) = match written {
        Ok(()) => (exit_code, message),
        Err(e) if exit_code == EXIT_OK => (EXIT_OTHER, Some(format!("cannot write manifest: {e}"))),
        Err(_) => (exit_code, message),
    };
    Outcome {
        exit_code,
        message,
        manifest,
    }
}

fn write_effective_config(cfg: &RunConfig, out: &Path, p: &mut Produced) -> Result<(), Failure> {
    std::fs::write(out.join("config.toml"), cfg.to_toml())?;
    p.outputs.push("config.toml".into());
    Ok(())
}

fn dispatch(verb: &Verb, cfg: &RunConfig, out: &Path, p: &mut Produced) -> Result<(), Failure> {
    match verb {
        Verb::Quasistatic => cfg.check_quasi().map_err(Failure::Config)?,
        _ => cfg.check().map_err(Failure::Config)?,
    }
    match verb {
        Verb::Simulate => simulate(cfg, out, p),
        Verb::Quasistatic => quasistatic(cfg, out, p),
        Verb::Twin { delta } => twin(cfg, *delta, out, p),
        Verb::VerifyDensity { axioms, samples } => verify_density(cfg, *axioms, *samples, out, p),
        Verb::Convergence { levels } => convergence(cfg, *levels, out, p),
        Verb::GalerkinSweep { eps_list, n_list } => galerkin_sweep(cfg, eps_list, n_list, out, p),
    }
}

fn setup(cfg: &RunConfig) -> Result<(std::sync::Arc<Space>, DensityModel), Failure> {
    let grid = cfg.grid().map_err(|e| Failure::Config(ConfigError::Validation(vec![format!("grid: {e}")])))?;
    let model = cfg.model().map_err(|e| Failure::Config(ConfigError::Validation(vec![format!("model: {e}")])))?;
    Ok((Space::new(grid), model))
}

fn csv_sink(path: &Path) -> Result<CsvSink<BufWriter<File>>, Failure> {
    Ok(CsvSink::new(BufWriter::new(File::create(path)?))?)
}

fn run_with_csv(
    cfg: &DynamicConfig,
    model: &DensityModel,
    initial: DynamicState,
    rc: &RunConfig,
    path: &Path,
) -> Result<TrajectorySummary<DynamicState>, Failure> {
    let mut sink = csv_sink(path)?;
    let mut io_error = None;
    let summary = run_dynamic(cfg, model, initial, rc.record_options(), &mut |r: &DiagnosticsRecord| {
        if let Err(e) = sink.write(r) {
            io_error.get_or_insert(e);
        }
    })?;
    sink.flush()?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    Ok(summary)
}

fn check_status<S>(s: &TrajectorySummary<S>) -> Result<(), Failure> {
    match &s.status {
        RunStatus::Completed => Ok(()),
        RunStatus::Failed { t, error } => Err(Failure::Solver {
            t: Some(*t),
            error: error.clone(),
        }),
    }
}

fn write_state_blob(path: &Path, fields: &[&dyn BlobField]) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    for f in fields {
        f.blob(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

trait BlobField {
    fn blob(&self, w: &mut dyn Write) -> std::io::Result<()>;
}

impl<const C: usize> BlobField for Field<C> {
    fn blob(&self, w: &mut dyn Write) -> std::io::Result<()> {
        self.write_blob(w)
    }
}

fn summary_json<S>(s: &TrajectorySummary<S>) -> Value {
    let last = s.records.last();
    json!({
        "steps": s.steps,
        "records": s.records.len(),
        "final_time": last.map(|r| r.t),
        "energy_law_residual": energy_law_residual(&s.records, false),
        "energy_law_residual_eps": energy_law_residual(&s.records, true),
    })
}

fn simulate(cfg: &RunConfig, out: &Path, p: &mut Produced) -> Result<(), Failure> {
    let (space, model) = setup(cfg)?;
    let initial = dynamic_initial(&space, &cfg.data);
    let summary = run_with_csv(&cfg.scheme, &model, initial, cfg, &out.join("diagnostics.csv"))?;
    p.outputs.push("diagnostics.csv".into());
    if cfg.io.write_fields {
        let s = &summary.final_state;
        write_state_blob(&out.join("final_state.bin"), &[&s.w, &s.v, &s.phi])?;
        p.outputs.push("final_state.bin".into());
    }
    p.results = summary_json(&summary);
    check_status(&summary)
}

fn write_picard(path: &Path, log: &[StepLog]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Failure::Other(e.to_string()))?;
    w.write_record(["step", "t", "iterations", "contraction", "distance", "phi_l2", "phi_mean"])
        .map_err(|e| Failure::Other(e.to_string()))?;
    for l in log {
        w.write_record([
            l.step.to_string(),
            format!("{:e}", l.t),
            l.iterations.to_string(),
            format!("{:e}", l.contraction),
            format!("{:e}", l.distance),
            format!("{:e}", l.phi_l2),
            format!("{:e}", l.phi_mean),
        ])
        .map_err(|e| Failure::Other(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn quasistatic(cfg: &RunConfig, out: &Path, p: &mut Produced) -> Result<(), Failure> {
    let (space, model) = setup(cfg)?;
    let symbols = assemble_symbols(&model, &space)?;
    let qc = cfg.quasi_config();
    let initial = quasi_initial(&space, &cfg.data, &model, &symbols, qc.picard_tol, qc.max_iter)
        .map_err(|error| Failure::Solver { t: Some(0.0), error })?;
    let mut sink = csv_sink(&out.join("diagnostics.csv"))?;
    let mut io_error = None;
    let summary = run_quasistatic(&qc, &model, &symbols, initial, cfg.record_options(), &mut |r| {
        if let Err(e) = sink.write(r) {
            io_error.get_or_insert(e);
        }
    })?;
    sink.flush()?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    p.outputs.push("diagnostics.csv".into());
    write_picard(&out.join("picard.csv"), &summary.picard)?;
    p.outputs.push("picard.csv".into());
    if cfg.io.write_fields {
        let s = &summary.final_state;
        write_state_blob(&out.join("final_state.bin"), &[&s.w, &s.phi])?;
        p.outputs.push("final_state.bin".into());
    }
    let mut results = summary_json(&summary);
    results["max_picard_iterations"] = json!(summary.picard.iter().map(|l| l.iterations).max());
    results["xi"] = json!(summary.records.last().and_then(|r| r.xi_running));
    p.results = results;
    check_status(&summary)
}

/// Unit-`H^3` mean-free perturbation direction of the species for twin runs.
pub fn twin_direction(space: &std::sync::Arc<Space>, seed: u64, band: usize) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut psi = ScalarField::random_band(space, band, &mut rng);
    let norm = sobolev_norm(&psi, 3);
    psi.scale(1.0 / norm);
    psi
}

/// Twin divergence sampled along two runs advanced in lockstep.
#[derive(Clone, Debug)]
pub struct TwinRun {
    pub times: Vec<f64>,
    pub divergence: Vec<f64>,
    pub status: RunStatus,
}

pub fn run_twin(
    config: &DynamicConfig,
    model: &DensityModel,
    a: DynamicState,
    b: DynamicState,
    stride: usize,
) -> crate::Result<TwinRun> {
    let mut sa = DynamicSolver::new(model, config.clone(), a)?;
    let mut sb = DynamicSolver::new(model, config.clone(), b)?;
    let mut times = vec![sa.state().t];
    let mut divergence = vec![twin_divergence(sa.state(), sb.state())?];
    let nsteps = config.steps();
    let mut status = RunStatus::Completed;
    for step in 1..=nsteps {
        let r = rayon::join(|| sa.step(), || sb.step());
        if let Err(error) = r.0.and(r.1) {
            status = RunStatus::Failed {
                t: sa.state().t,
                error,
            };
            break;
        }
        if step % stride.max(1) == 0 || step == nsteps {
            times.push(sa.state().t);
            divergence.push(twin_divergence(sa.state(), sb.state())?);
        }
    }
    Ok(TwinRun {
        times,
        divergence,
        status,
    })
}

fn twin(cfg: &RunConfig, delta: f64, out: &Path, p: &mut Produced) -> Result<(), Failure> {
    if !delta.is_finite() {
        return Err(Failure::Config(ConfigError::Validation(vec![format!(
            "--delta must be finite (got {delta})"
        )])));
    }
    let (space, model) = setup(cfg)?;
    let a = dynamic_initial(&space, &cfg.data);
    let mut b = a.clone();
    b.phi.axpy(delta, &twin_direction(&space, cfg.data.seed, cfg.data.band));
    let run = run_twin(&cfg.scheme, &model, a, b, cfg.io.stride)?;
    let mut w = csv::Writer::from_path(out.join("twin.csv")).map_err(|e| Failure::Other(e.to_string()))?;
    w.write_record(["t", "divergence"]).map_err(|e| Failure::Other(e.to_string()))?;
    for (t, d) in run.times.iter().zip(&run.divergence) {
        w.write_record([format!("{t:e}"), format!("{d:e}")])
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    w.flush()?;
    p.outputs.push("twin.csv".into());
    p.results = json!({
        "delta": delta,
        "final_time": run.times.last(),
        "final_divergence": run.divergence.last(),
    });
    match run.status {
        RunStatus::Completed => Ok(()),
        RunStatus::Failed { t, error } => Err(Failure::Solver { t: Some(t), error }),
    }
}

fn verify_density(cfg: &RunConfig, axioms: bool, samples: usize, out: &Path, p: &mut Produced) -> Result<(), Failure> {
    let (_, model) = setup(cfg)?;
    let mut failures = Vec::new();
    let coercivity = match coercivity_check(&model) {
        Ok(r) => {
            if !r.pass {
                failures.push(format!("coercivity: gamma_estimate = {:e}", r.gamma_estimate));
            }
            serde_json::to_value(&r).map_err(|e| Failure::Other(e.to_string()))?
        }
        Err(e) => {
            failures.push(format!("coercivity: {e}"));
            json!({ "error": e.to_string() })
        }
    };
    let mut report = json!({ "model": model, "coercivity": coercivity });
    if axioms {
        let r = axiom_check(&model.base, samples, cfg.data.seed);
        if !r.all_pass() {
            let mut which = Vec::new();
            if !r.frame_invariance.pass {
                which.push("frame invariance".to_string());
            }
            if !r.blow_up.pass {
                which.push("blow-up".to_string());
            }
            if !r.normalization.pass {
                which.push("normalization".to_string());
            }
            if !r.non_degeneracy.pass {
                let w = r
                    .non_degeneracy
                    .witness
                    .as_ref()
                    .map(|w| format!(" (witness F = {:?}, W0 = {:e}, dist^2 = {:e})", w.f, w.w0, w.dist2))
                    .unwrap_or_default();
                which.push(format!("non-degeneracy{w}"));
            }
            failures.push(format!("axioms: {}", which.join("; ")));
        }
        report["axioms"] = serde_json::to_value(&r).map_err(|e| Failure::Other(e.to_string()))?;
    }
    report["pass"] = json!(failures.is_empty());
    std::fs::write(
        out.join("report.json"),
        serde_json::to_string_pretty(&report).map_err(|e| Failure::Other(e.to_string()))? + "\n",
    )?;
    p.outputs.push("report.json".into());
    p.results = report;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failures.join("; ")))
    }
}

fn convergence(cfg: &RunConfig, levels: usize, out: &Path, p: &mut Produced) -> Result<(), Failure> {
    if levels < 2 {
        return Err(Failure::Config(ConfigError::Validation(vec![format!(
            "--levels must be at least 2 (got {levels})"
        )])));
    }
    let (space, model) = setup(cfg)?;
    let initial = dynamic_initial(&space, &cfg.data);
    let runs: Vec<Result<TrajectorySummary<DynamicState>, Failure>> = (0..levels)
        .into_par_iter()
        .map(|k| {
            let dir = out.join(format!("level_{k}"));
            std::fs::create_dir_all(&dir)?;
            let mut sc = cfg.scheme.clone();
            sc.dt = cfg.scheme.dt / f64::powi(2.0, k as i32);
            run_with_csv(&sc, &model, initial.clone(), cfg, &dir.join("diagnostics.csv"))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    for (k, r) in runs.iter().enumerate() {
        p.outputs.push(format!("level_{k}/diagnostics.csv"));
        check_status(r)?;
    }
    let mut w = csv::Writer::from_path(out.join("convergence.csv")).map_err(|e| Failure::Other(e.to_string()))?;
    w.write_record(["level", "dt", "energy_law_residual", "residual_ratio", "self_difference", "difference_ratio"])
        .map_err(|e| Failure::Other(e.to_string()))?;
    let residuals: Vec<f64> = runs.iter().map(|r| energy_law_residual(&r.records, true)).collect();
    let diffs: Vec<f64> = runs
        .windows(2)
        .map(|w| twin_divergence(&w[0].final_state, &w[1].final_state).map(f64::sqrt))
        .collect::<crate::Result<_>>()?;
    let mut rows = Vec::new();
    for k in 0..levels {
        let ratio = if k > 0 { residuals[k - 1] / residuals[k] } else { f64::NAN };
        let d = diffs.get(k).copied().unwrap_or(f64::NAN);
        let dr = if k > 0 && k < diffs.len() { diffs[k - 1] / diffs[k] } else { f64::NAN };
        let dt = cfg.scheme.dt / f64::powi(2.0, k as i32);
        w.write_record([
            k.to_string(),
            format!("{dt:e}"),
            format!("{:e}", residuals[k]),
            format!("{ratio:e}"),
            format!("{d:e}"),
            format!("{dr:e}"),
        ])
        .map_err(|e| Failure::Other(e.to_string()))?;
        rows.push(json!({ "level": k, "dt": dt, "energy_law_residual": residuals[k], "self_difference": d }));
    }
    w.flush()?;
    p.outputs.push("convergence.csv".into());
    p.results = json!({ "levels": rows });
    Ok(())
}

fn galerkin_sweep(
    cfg: &RunConfig,
    eps_list: &[f64],
    n_list: &[usize],
    out: &Path,
    p: &mut Produced,
) -> Result<(), Failure> {
    let mut bad = Vec::new();
    for &e in eps_list {
        if !(e >= 0.0 && e.is_finite()) {
            bad.push(format!("--eps-list entries must be non-negative (got {e})"));
        }
    }
    for &n in n_list {
        if n < 1 || n > cfg.grid.n / 2 {
            bad.push(format!("--n-list entries must lie in 1..={} (got {n})", cfg.grid.n / 2));
        }
    }
    if !bad.is_empty() {
        return Err(Failure::Config(ConfigError::Validation(bad)));
    }
    let (space, model) = setup(cfg)?;
    let initial = dynamic_initial(&space, &cfg.data);
    let mut cases: Vec<(f64, Option<usize>)> = vec![(0.0, None)];
    let ns: Vec<Option<usize>> = if n_list.is_empty() {
        vec![None]
    } else {
        n_list.iter().map(|&n| Some(n)).collect()
    };
    for &e in eps_list {
        for &n in &ns {
            if (e, n) != (0.0, None) {
                cases.push((e, n));
            }
        }
    }
    let dir_name = |e: f64, n: Option<usize>| match n {
        Some(n) => format!("eps_{e:e}_n_{n}"),
        None => format!("eps_{e:e}_full"),
    };
    let runs: Vec<Result<TrajectorySummary<DynamicState>, Failure>> = cases
        .par_iter()
        .map(|&(e, n)| {
            let dir = out.join(dir_name(e, n));
            std::fs::create_dir_all(&dir)?;
            let mut sc = cfg.scheme.clone();
            sc.eps = e;
            sc.n_galerkin = n;
            run_with_csv(&sc, &model, initial.clone(), cfg, &dir.join("diagnostics.csv"))
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>, _>>()?;
    for (r, &(e, n)) in runs.iter().zip(&cases) {
        p.outputs.push(format!("{}/diagnostics.csv", dir_name(e, n)));
        check_status(r)?;
    }
    let reference = &runs[0].final_state;
    let mut w = csv::Writer::from_path(out.join("sweep.csv")).map_err(|e| Failure::Other(e.to_string()))?;
    w.write_record(["eps", "n_galerkin", "energy_law_residual_eps", "distance_to_reference"])
        .map_err(|e| Failure::Other(e.to_string()))?;
    let mut rows = Vec::new();
    for (r, &(e, n)) in runs.iter().zip(&cases) {
        let res = energy_law_residual(&r.records, true);
        let dist = twin_divergence(&r.final_state, reference)?.sqrt();
        w.write_record([
            format!("{e:e}"),
            n.map(|n| n.to_string()).unwrap_or_default(),
            format!("{res:e}"),
            format!("{dist:e}"),
        ])
        .map_err(|e| Failure::Other(e.to_string()))?;
        rows.push(json!({ "eps": e, "n_galerkin": n, "energy_law_residual_eps": res, "distance_to_reference": dist }));
    }
    w.flush()?;
    p.outputs.push("sweep.csv".into());
    p.results = json!({ "runs": rows });
    Ok(())
}

/// Default output directory of a verb when none is configured.
pub fn default_out_dir(verb: &Verb) -> PathBuf {
    PathBuf::from("runs").join(verb.name())
}
