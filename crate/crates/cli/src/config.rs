//! Experiment configuration files. See `docs/config-format.md`.

use std::path::{Path, PathBuf};

use nvm_lstm::cost::HwParams;
use nvm_lstm::experiment::{full_bit_grid, ExperimentSpec, TaskSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;
use crate::manifest::MANIFEST_FORMAT;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Train,
    Sweep,
    Cost,
    NoiseSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Sweep => "sweep",
            Command::Cost => "cost",
            Command::NoiseSweep => "noise-sweep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    /// `(weight bits, ADC/DAC bits)` cells.
    pub grid: Vec<(u32, u32)>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { grid: full_bit_grid() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSweepSettings {
    pub betas: Vec<f64>,
    /// ADC/DAC widths of the ADC-noise table; empty skips it.
    pub adc_bits: Vec<u32>,
    pub adc_noise: Vec<bool>,
}

impl Default for NoiseSweepSettings {
    fn default() -> Self {
        Self { betas: vec![0.0, 0.05, 0.1, 0.2], adc_bits: Vec::new(), adc_noise: vec![false, true] }
    }
}

/// A fully resolved configuration: every field explicit, presets applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Required by every command except `cost`.
    #[serde(default)]
    pub experiment: Option<ExperimentSpec>,
    #[serde(default)]
    pub hardware: HwParams,
    #[serde(default)]
    pub sweep: SweepSettings,
    #[serde(default)]
    pub noise_sweep: NoiseSweepSettings,
}

impl ExperimentConfig {
    /// Applies command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        if let (Some(s), Some(e)) = (seed, self.experiment.as_mut()) {
            e.train.seed = s;
        }
        if out.is_some() {
            self.out = out;
        }
        self
    }

    /// Checks every nested invariant before any compute starts.
    pub fn validate(&self, path: &Path) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::config(path, m));
        match (self.command, &self.experiment) {
            (Command::Cost, _) => {}
            (_, None) => return bad(format!("command `{}` needs an [experiment] section", self.command.name())),
            (_, Some(e)) => {
                e.validate().map_err(|err| CliError::config(path, err))?;
                check_task_files(&e.task, path)?;
            }
        }
        if self.command == Command::Sweep {
            if self.sweep.grid.is_empty() {
                return bad("sweep grid is empty".into());
            }
            if let Some((w, a)) = self.sweep.grid.iter().find(|(w, a)| !(1..=16).contains(w) || !(1..=16).contains(a)) {
                return bad(format!("sweep cell ({w}, {a}) outside 1..=16 bits"));
            }
        }
        if self.command == Command::NoiseSweep {
            let ns = &self.noise_sweep;
            if ns.betas.is_empty() {
                return bad("noise sweep needs at least one beta".into());
            }
            if let Some(b) = ns.betas.iter().find(|b| !(0.0..=0.2).contains(*b)) {
                return bad(format!("weight noise ratio {b} outside [0, 0.2]"));
            }
            if ns.betas.windows(2).any(|w| w[0] >= w[1]) {
                return bad("noise sweep betas must be strictly increasing".into());
            }
            if !ns.adc_bits.is_empty() && ns.adc_noise.is_empty() {
                return bad("adc_bits given without adc_noise flags".into());
            }
            if self.experiment.as_ref().is_some_and(|e| e.train.bitwidths.is_none()) {
                return bad("noise sweeps need train.bitwidths".into());
            }
        }
        // Hardware infeasibility has its own exit status.
        if self.command == Command::Cost {
            self.hardware.validate()?;
        }
        Ok(())
    }
}

fn check_task_files(task: &TaskSpec, config: &Path) -> Result<(), CliError> {
    let path = match task {
        TaskSpec::Char { path: Some(p), .. } | TaskSpec::Word { path: Some(p), .. } => p,
        _ => return Ok(()),
    };
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::config(config, format!("corpus file {} not found", path.display())))
    }
}

/// Reads a TOML or JSON config (or a run manifest) and resolves it. A
/// `command` given here takes precedence over the file's.
pub fn load(path: &Path, command: Option<Command>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::config(path, e))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) || text.trim_start().starts_with('{');
    let raw: Value = if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::config(path, e))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::config(path, e))?
    };
    resolve(raw, command).map_err(|m| CliError::config(path, m))
}

/// Expands a raw config value: unwraps manifests and lays the user's
/// experiment settings over the task preset.
pub fn resolve(mut raw: Value, command: Option<Command>) -> Result<ExperimentConfig, String> {
    if raw.get("format").and_then(Value::as_str) == Some(MANIFEST_FORMAT) {
        raw = raw.get_mut("config").map(Value::take).ok_or("manifest has no `config` entry")?;
    }
    if let (Some(c), Some(obj)) = (command, raw.as_object_mut()) {
        obj.insert("command".into(), serde_json::to_value(c).map_err(|e| e.to_string())?);
    }
    if let Some(exp) = raw.get_mut("experiment").filter(|e| !e.is_null()) {
        let kind = exp
            .pointer("/task/kind")
            .and_then(Value::as_str)
            .ok_or("experiment.task.kind is required (har, char or word)")?;
        let task = match kind {
            "har" => TaskSpec::har(),
            "char" => TaskSpec::char(),
            "word" => TaskSpec::word(),
            other => return Err(format!("unknown task kind `{other}`")),
        };
        let mut merged = serde_json::to_value(ExperimentSpec::preset(task)).map_err(|e| e.to_string())?;
        merge(&mut merged, exp.take());
        *exp = merged;
    }
    serde_json::from_value(raw).map_err(|e| e.to_string())
}

/// Recursive object merge; non-object values in `over` replace `base`.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if v.is_object() && slot.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn user_values_override_the_preset() {
        let cfg = resolve(json!({
            "command": "train",
            "experiment": { "task": { "kind": "har", "sequences": 40 }, "train": { "epochs": 2 } }
        }), None)
        .unwrap();
        let e = cfg.experiment.unwrap();
        let preset = ExperimentSpec::preset(TaskSpec::har());
        assert_eq!(e.train.epochs, 2);
        assert_eq!(e.train.learning_rate, preset.train.learning_rate);
        assert_eq!(e.hidden_size, preset.hidden_size);
        assert_eq!(e.task, TaskSpec::Har { sequences: 40, valid_fraction: 0.25 });
    }

    #[test]
    fn resolved_config_is_a_fixed_point() {
        let cfg = resolve(json!({ "command": "sweep", "experiment": { "task": { "kind": "char" } } }), None).unwrap();
        let again = resolve(serde_json::to_value(&cfg).unwrap(), None).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn toml_and_json_agree() {
        let t: Value = toml::from_str(
            "command = \"train\"\n[experiment]\nhidden_size = 8\n[experiment.task]\nkind = \"word\"\n[experiment.train.bitwidths]\nweight = 4\nadc = 2\ndac = 2\n",
        )
        .unwrap();
        let j = json!({ "command": "train", "experiment": { "hidden_size": 8, "task": { "kind": "word" },
            "train": { "bitwidths": { "weight": 4, "adc": 2, "dac": 2 } } } });
        assert_eq!(resolve(t, None).unwrap(), resolve(j, None).unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(resolve(json!({ "command": "cost", "hardwar": {} }), None).is_err());
        assert!(resolve(json!({ "command": "train", "experiment": { "task": { "kind": "har" }, "train": { "epoch": 3 } } }), None).is_err());
        assert!(resolve(json!({ "command": "train", "experiment": { "task": { "kind": "speech" } } }), None).is_err());
        assert!(resolve(json!({ "experiment": { "task": { "kind": "har" } } }), None).is_err());
    }

    #[test]
    fn overrides_apply_to_command_seed_and_output() {
        let cfg = resolve(json!({ "command": "train", "experiment": { "task": { "kind": "har" } } }), Some(Command::Sweep))
            .unwrap()
            .with_overrides(Some(9), Some("x".into()));
        assert_eq!(cfg.command, Command::Sweep);
        assert_eq!(cfg.experiment.unwrap().train.seed, 9);
        assert_eq!(cfg.out, Some(PathBuf::from("x")));
    }

    #[test]
    fn noise_sweep_betas_are_checked() {
        let cfg = |betas: Vec<f64>| {
            resolve(json!({ "command": "noise-sweep",
                "experiment": { "task": { "kind": "har" }, "train": { "bitwidths": { "weight": 4, "adc": 4, "dac": 4 } } },
                "noise_sweep": { "betas": betas } }), None)
            .unwrap()
        };
        let p = Path::new("c.toml");
        assert!(cfg(vec![0.0, 0.1]).validate(p).is_ok());
        assert!(cfg(vec![0.0, 0.3]).validate(p).is_err());
        assert!(cfg(vec![0.1, 0.0]).validate(p).is_err());
    }
}
