//! Run configuration, initial data, output files and the command verbs.

mod command;
mod config;
mod initial;

pub use command::{
    default_out_dir, run_command, run_twin, twin_direction, Failure, Manifest, Outcome, TwinRun, Verb, EXIT_CONFIG,
    EXIT_OK, EXIT_OTHER, EXIT_SOLVER, EXIT_VERIFICATION,
};
pub use config::{parse_config, parse_config_str, ConfigError, GridSection, IoSection, ModelSection, QuasiSection, RunConfig};
pub use initial::{dynamic_initial, quasi_initial, quasi_species, DataConfig};
