//! Experiment harness: config files in, manifest, report and metrics out.

pub mod config;
pub mod error;
pub mod manifest;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{Command, ExperimentConfig};
pub use error::CliError;
pub use run::{execute, Artifacts};

/// Loads, overrides, validates and executes one config file.
pub fn run(path: &Path, command: Option<Command>, seed: Option<u64>, out: Option<PathBuf>) -> Result<Artifacts, CliError> {
    let cfg = config::load(path, command)?.with_overrides(seed, out);
    cfg.validate(path)?;
    execute(&cfg)
}

/// `cost` without a config file: default hardware parameters.
pub fn run_default_cost(out: Option<PathBuf>) -> Result<Artifacts, CliError> {
    let cfg = config::resolve(serde_json::json!({}), Some(Command::Cost))
        .expect("default cost config resolves")
        .with_overrides(None, out);
    cfg.validate(Path::new("<defaults>"))?;
    execute(&cfg)
}
