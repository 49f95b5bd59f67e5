//! Command execution and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use nvm_lstm::cost::{estimate, CostReport};
use nvm_lstm::experiment::{noise_sweep, run_experiment, sweep_bitwidths, ExperimentSpec};
use nvm_lstm::trainer::CurvePoint;
use serde::Serialize;

use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;
use crate::manifest::Manifest;

pub const DEFAULT_OUT: &str = "nvm-lstm-out";

/// Files written by one run.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub report: PathBuf,
    pub metrics: PathBuf,
    /// One-line human summary.
    pub summary: String,
}

/// Runs a validated config, writing manifest.json first and the report and
/// metrics after the computation succeeds.
pub fn execute(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).map_err(|e| CliError::config(&dir, format!("cannot create output directory: {e}")))?;
    let manifest = dir.join("manifest.json");
    write_json(&manifest, &Manifest::new(cfg))?;
    let report = dir.join("report.json");
    let metrics = dir.join("metrics.csv");
    let summary = match cfg.command {
        Command::Cost => cost(cfg, &report, &metrics)?,
        Command::Train => train(spec(cfg), &report, &metrics)?,
        Command::Sweep => sweep(cfg, &report, &metrics)?,
        Command::NoiseSweep => noise(cfg, &dir, &report, &metrics)?,
    };
    Ok(Artifacts { dir, manifest, report, metrics, summary })
}

fn spec(cfg: &ExperimentConfig) -> &ExperimentSpec {
    cfg.experiment.as_ref().expect("validated config has an experiment")
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(|source| CliError::Output { path: path.into(), source })
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Output { path: path.into(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|source| CliError::Output { path: path.into(), source })
}

#[derive(Serialize)]
struct CostRow {
    quantity: &'static str,
    value: f64,
    unit: &'static str,
}

fn cost(cfg: &ExperimentConfig, report: &Path, metrics: &Path) -> Result<String, CliError> {
    let r: CostReport = estimate(&cfg.hardware)?;
    write_json(report, &r)?;
    let rows = [
        CostRow { quantity: "vmm_throughput", value: r.vmm_throughput.0, unit: "GOP/s" },
        CostRow { quantity: "overall_throughput", value: r.overall_throughput.0, unit: "GOP/s" },
        CostRow { quantity: "adc_power", value: r.power.adc.0, unit: "W" },
        CostRow { quantity: "array_power", value: r.power.array.0, unit: "W" },
        CostRow { quantity: "residual_power", value: r.power.residual.0, unit: "W" },
        CostRow { quantity: "total_power", value: r.power.total.0, unit: "W" },
        CostRow { quantity: "adc_area", value: r.area.adc.mm2(), unit: "mm2" },
        CostRow { quantity: "array_area", value: r.area.array.mm2(), unit: "mm2" },
        CostRow { quantity: "residual_area", value: r.area.residual.mm2(), unit: "mm2" },
        CostRow { quantity: "total_area", value: r.area.total.mm2(), unit: "mm2" },
        CostRow { quantity: "computing_efficiency", value: r.computing_efficiency, unit: "GOP/s/W" },
        CostRow { quantity: "area_efficiency", value: r.area_efficiency, unit: "GOP/s/mm2" },
    ];
    write_csv(metrics, &rows)?;
    Ok(format!(
        "{:.0} GOP/s, {:.3} W, {:.3} mm2, {:.0} GOP/s/W",
        r.overall_throughput.0,
        r.power.total.0,
        r.area.total.mm2(),
        r.computing_efficiency
    ))
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    dataset: &'a nvm_lstm::tasks::DatasetManifest,
    report: &'a nvm_lstm::trainer::TrainReport,
}

fn train(spec: &ExperimentSpec, report: &Path, metrics: &Path) -> Result<String, CliError> {
    let out = run_experiment::<f64>(spec)?;
    write_json(report, &TrainOutput { dataset: &out.dataset, report: &out.report })?;
    let rows: Vec<CurvePoint> = out.report.curve.clone();
    write_csv(metrics, &rows)?;
    let v = &out.report.valid;
    Ok(format!("{} valid {} = {:.4}", spec.task.name(), v.metric, v.value()))
}

#[derive(Serialize)]
struct SweepRow {
    weight_bits: u32,
    adc_dac_bits: u32,
    train_metric: f64,
    valid_metric: f64,
}

fn sweep(cfg: &ExperimentConfig, report: &Path, metrics: &Path) -> Result<String, CliError> {
    let cells = sweep_bitwidths::<f64>(spec(cfg), &cfg.sweep.grid)?;
    write_json(report, &cells)?;
    let rows: Vec<SweepRow> = cells
        .iter()
        .map(|c| SweepRow {
            weight_bits: c.weight_bits,
            adc_dac_bits: c.adc_dac_bits,
            train_metric: c.report.train.value(),
            valid_metric: c.report.valid.value(),
        })
        .collect();
    write_csv(metrics, &rows)?;
    Ok(format!("{} cells", rows.len()))
}

#[derive(Serialize)]
struct BetaRow {
    beta: f64,
    train_metric: f64,
    valid_metric: f64,
}

#[derive(Serialize)]
struct AdcRow {
    adc_dac_bits: u32,
    adc_noise: bool,
    train_metric: f64,
    valid_metric: f64,
}

fn noise(cfg: &ExperimentConfig, dir: &Path, report: &Path, metrics: &Path) -> Result<String, CliError> {
    let ns = &cfg.noise_sweep;
    let flags = if ns.adc_bits.is_empty() { &[][..] } else { &ns.adc_noise[..] };
    let res = noise_sweep::<f64>(spec(cfg), &ns.betas, &ns.adc_bits, flags)?;
    write_json(report, &res)?;
    let rows: Vec<BetaRow> = res
        .weight_noise
        .iter()
        .map(|r| BetaRow { beta: r.beta, train_metric: r.report.train.value(), valid_metric: r.report.valid.value() })
        .collect();
    write_csv(metrics, &rows)?;
    if !res.adc_noise.is_empty() {
        let adc: Vec<AdcRow> = res
            .adc_noise
            .iter()
            .map(|r| AdcRow {
                adc_dac_bits: r.adc_dac_bits,
                adc_noise: r.adc_noise,
                train_metric: r.report.train.value(),
                valid_metric: r.report.valid.value(),
            })
            .collect();
        write_csv(&dir.join("adc_noise.csv"), &adc)?;
    }
    Ok(format!("{} weight-noise rows, {} ADC-noise rows", rows.len(), res.adc_noise.len()))
}
