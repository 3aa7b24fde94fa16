use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prestrain_core::run::{
    default_out_dir, parse_config, run_command, RunConfig, Verb, EXIT_CONFIG, EXIT_OTHER,
};

/// Pseudo-spectral simulator and verification suite for stress-assisted
/// diffusion in prestrained elastic solids.
#[derive(Parser, Debug)]
#[command(name = "prestrain-lab", version)]
struct Cli {
    /// Run configuration (TOML); defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides io.out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Steps between diagnostics records (overrides io.stride).
    #[arg(long, global = true)]
    stride: Option<usize>,
    /// Seed of the initial data (overrides data.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fixed-point tolerance (overrides quasi.picard_tol).
    #[arg(long, global = true)]
    picard_tol: Option<f64>,
    /// Fixed-point iteration cap (overrides quasi.max_iter).
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[command(subcommand)]
    verb: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dynamic run to scheme.t_end.
    Simulate,
    /// Quasi-static run to scheme.t_end.
    Quasistatic,
    /// Paired dynamic runs with the species perturbed by delta.
    Twin {
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
    },
    /// Coercivity (and optionally axiom) certification of the density.
    VerifyDensity {
        #[arg(long)]
        axioms: bool,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Dynamic runs at dt, dt/2, ..., dt/2^(levels-1).
    Convergence {
        #[arg(long)]
        levels: usize,
    },
    /// Regularization and truncation sweep against the unregularized run.
    GalerkinSweep {
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        eps_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        n_list: Vec<usize>,
    },
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("PRESTRAIN_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("PRESTRAIN_LAB_THREADS must be a positive integer (got {raw:?})"))?;
    if n == 0 {
        return Err("PRESTRAIN_LAB_THREADS must be a positive integer (got 0)".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let mut cfg = match &cli.config {
        Some(path) => match parse_config(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(s) = cli.stride {
        cfg.io.stride = s;
    }
    if let Some(s) = cli.seed {
        cfg.data.seed = s;
    }
    if let Some(t) = cli.picard_tol {
        cfg.quasi.picard_tol = t;
    }
    if let Some(m) = cli.max_iter {
        cfg.quasi.max_iter = m;
    }
    if let Some(o) = &cli.out {
        cfg.io.out_dir = Some(o.clone());
    }
    let verb = match cli.verb {
        Command::Simulate => Verb::Simulate,
        Command::Quasistatic => Verb::Quasistatic,
        Command::Twin { delta } => Verb::Twin { delta },
        Command::VerifyDensity { axioms, samples } => Verb::VerifyDensity { axioms, samples },
        Command::Convergence { levels } => Verb::Convergence { levels },
        Command::GalerkinSweep { eps_list, n_list } => Verb::GalerkinSweep { eps_list, n_list },
    };
    let out = cfg.io.out_dir.clone().unwrap_or_else(|| default_out_dir(&verb));
    let outcome = run_command(&verb, &cfg, &out);
    match &outcome.message {
        Some(m) => eprintln!("{}: {m}", verb.name()),
        None => println!("{}: ok ({})", verb.name(), out.display()),
    }
    let code = u8::try_from(outcome.exit_code).unwrap_or(EXIT_OTHER as u8);
    ExitCode::from(code)
}
