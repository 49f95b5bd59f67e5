//! Experiment definitions: which task, how large a cell, how to train it,
//! plus the bit-width and noise sweeps built on top.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossbar::NoiseConfig;
use crate::error::Result;
use crate::model::Model;
use crate::scalar::Scalar;
use crate::seed::stream_rng;
use crate::tasks::{
    bundled_char_corpus, bundled_word_corpus, load_char_corpus, load_word_corpus, synth_har, CharCorpusOptions,
    DatasetManifest, DatasetSplits, CHAR_INPUT_DIM,
};
use crate::trainer::{train, Bitwidths, Optimizer, TrainConfig, TrainReport, TrainedModel};

/// Dataset selection. Paths default to the bundled corpora.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Har {
        #[serde(default = "default_har_sequences")]
        sequences: usize,
        #[serde(default = "default_valid_fraction")]
        valid_fraction: f64,
    },
    Char {
        #[serde(default)]
        path: Option<PathBuf>,
        #[serde(default)]
        alphabet: Option<String>,
        #[serde(default = "default_char_input")]
        input_dim: usize,
        #[serde(default)]
        max_sequences: Option<usize>,
        #[serde(default = "default_valid_fraction")]
        valid_fraction: f64,
    },
    Word {
        #[serde(default)]
        path: Option<PathBuf>,
        #[serde(default = "default_vocab_cap")]
        vocab_cap: usize,
        #[serde(default)]
        max_sequences: Option<usize>,
        #[serde(default = "default_valid_fraction")]
        valid_fraction: f64,
    },
}

fn default_har_sequences() -> usize {
    720
}
fn default_valid_fraction() -> f64 {
    0.1
}
fn default_char_input() -> usize {
    CHAR_INPUT_DIM
}
fn default_vocab_cap() -> usize {
    10_000
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Har { .. } => "har",
            TaskSpec::Char { .. } => "char",
            TaskSpec::Word { .. } => "word",
        }
    }

    pub fn har() -> Self {
        TaskSpec::Har { sequences: default_har_sequences(), valid_fraction: 0.25 }
    }

    pub fn char() -> Self {
        TaskSpec::Char {
            path: None,
            alphabet: None,
            input_dim: CHAR_INPUT_DIM,
            max_sequences: None,
            valid_fraction: default_valid_fraction(),
        }
    }

    pub fn word() -> Self {
        TaskSpec::Word { path: None, vocab_cap: default_vocab_cap(), max_sequences: None, valid_fraction: default_valid_fraction() }
    }

    /// Loads and splits the dataset; all randomness comes from `seed`.
    pub fn load(&self, seed: u64) -> Result<DatasetSplits> {
        let cap = |ds: crate::tasks::SequenceDataset, max: &Option<usize>| match max {
            Some(n) => ds.subsample(*n, seed),
            None => ds,
        };
        match self {
            TaskSpec::Har { sequences, valid_fraction } => synth_har(seed, *sequences).split(*valid_fraction, seed),
            TaskSpec::Char { path, alphabet, input_dim, max_sequences, valid_fraction } => {
                let mut opts = CharCorpusOptions { input_dim: *input_dim, ..Default::default() };
                if let Some(a) = alphabet {
                    opts.alphabet = a.clone();
                }
                let ds = match path {
                    Some(p) => load_char_corpus(p, &opts)?,
                    None => bundled_char_corpus(&opts)?,
                };
                cap(ds, max_sequences).split(*valid_fraction, seed)
            }
            TaskSpec::Word { path, vocab_cap, max_sequences, valid_fraction } => {
                let (ds, _) = match path {
                    Some(p) => load_word_corpus(p, *vocab_cap)?,
                    None => bundled_word_corpus(*vocab_cap)?,
                };
                cap(ds, max_sequences).split(*valid_fraction, seed)
            }
        }
    }

    fn source(&self) -> String {
        match self {
            TaskSpec::Har { sequences, .. } => format!("synthetic har, {sequences} sequences"),
            TaskSpec::Char { path: Some(p), .. } | TaskSpec::Word { path: Some(p), .. } => p.display().to_string(),
            TaskSpec::Char { path: None, .. } => "bundled names".into(),
            TaskSpec::Word { path: None, .. } => "bundled sentences".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub task: TaskSpec,
    pub hidden_size: usize,
    #[serde(default)]
    pub train: TrainConfig,
}

impl ExperimentSpec {
    /// Per-task defaults, tuned once on the floating-point cell and shared by
    /// every bit width.
    pub fn preset(task: TaskSpec) -> Self {
        let (hidden_size, train) = match task {
            TaskSpec::Har { .. } => (
                32,
                TrainConfig { learning_rate: 0.5, epochs: 20, batch_size: 16, bptt_length: 32, init_scale: 0.2, ..Default::default() },
            ),
            TaskSpec::Char { .. } => (
                256,
                TrainConfig {
                    optimizer: Optimizer::Adam,
                    learning_rate: 0.003,
                    epochs: 10,
                    batch_size: 16,
                    bptt_length: 16,
                    init_scale: 0.1,
                    ..Default::default()
                },
            ),
            TaskSpec::Word { .. } => (
                64,
                TrainConfig { learning_rate: 1.0, epochs: 10, batch_size: 16, bptt_length: 32, init_scale: 0.1, w_max: 0.25, ..Default::default() },
            ),
        };
        Self { task, hidden_size, train }
    }

    pub fn with_bits(mut self, bits: Option<Bitwidths>) -> Self {
        self.train.bitwidths = bits;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.train.seed = seed;
        self
    }

    pub fn with_noise(mut self, noise: NoiseConfig) -> Self {
        self.train.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 {
            return Err(crate::Error::Config("hidden_size must be positive".into()));
        }
        self.train.validate()
    }

    /// Model initialized from the `init` stream of the run seed.
    pub fn init_model<S: Scalar>(&self, data: &DatasetSplits) -> Result<Model<S>> {
        Model::new(&data.train, self.hidden_size, self.train.init_scale, &mut stream_rng(self.train.seed, "init"))
    }
}

/// Everything one training run produces.
#[derive(Clone, Debug)]
pub struct RunOutcome<S> {
    pub dataset: DatasetManifest,
    pub report: TrainReport,
    pub trained: TrainedModel<S>,
}

pub fn run_experiment<S: Scalar>(spec: &ExperimentSpec) -> Result<RunOutcome<S>> {
    spec.validate()?;
    let data = spec.task.load(spec.train.seed)?;
    run_on::<S>(spec, &data)
}

fn run_on<S: Scalar>(spec: &ExperimentSpec, data: &DatasetSplits) -> Result<RunOutcome<S>> {
    let model = spec.init_model::<S>(data)?;
    let (trained, report) = train(model, data, &spec.train)?;
    Ok(RunOutcome { dataset: data.manifest(spec.train.seed, &spec.task.source()), report, trained })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub weight_bits: u32,
    pub adc_dac_bits: u32,
    pub report: TrainReport,
}

/// One train + evaluate per `(weight bits, ADC/DAC bits)` cell. Every cell
/// shares the data split, initial weights and random streams of `spec`.
pub fn sweep_bitwidths<S: Scalar>(spec: &ExperimentSpec, grid: &[(u32, u32)]) -> Result<Vec<SweepCell>> {
    spec.validate()?;
    let data = spec.task.load(spec.train.seed)?;
    grid.par_iter()
        .map(|&(w, a)| {
            let cell = spec.clone().with_bits(Some(Bitwidths::new(w, a)));
            let out = run_on::<S>(&cell, &data)?;
            Ok(SweepCell { weight_bits: w, adc_dac_bits: a, report: out.report })
        })
        .collect()
}

/// The full 1..=4 by 1..=4 grid, weight bits outermost.
pub fn full_bit_grid() -> Vec<(u32, u32)> {
    (1..=4).flat_map(|w| (1..=4).map(move |a| (w, a))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightNoiseRow {
    pub beta: f64,
    pub report: TrainReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdcNoiseRow {
    pub adc_dac_bits: u32,
    pub adc_noise: bool,
    pub report: TrainReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweep {
    /// Metric against weight-noise ratio at the spec's bit widths.
    pub weight_noise: Vec<WeightNoiseRow>,
    /// Metric against ADC/DAC bits with ADC noise off and on.
    pub adc_noise: Vec<AdcNoiseRow>,
}

/// Weight-noise sweep over `betas` (ADC noise off) and ADC-noise sweep over
/// `adc_bits` x `adc_flags` (weight noise off). `spec` must be quantized.
pub fn noise_sweep<S: Scalar>(spec: &ExperimentSpec, betas: &[f64], adc_bits: &[u32], adc_flags: &[bool]) -> Result<NoiseSweep> {
    spec.validate()?;
    let bits = spec
        .train
        .bitwidths
        .ok_or_else(|| crate::Error::Config("noise sweeps need quantized bit widths".into()))?;
    for &b in betas {
        NoiseConfig { weight_noise_beta: b, ..spec.train.noise }.validate()?;
    }
    let data = spec.task.load(spec.train.seed)?;
    let base = spec.train.noise;
    let weight_noise = betas
        .par_iter()
        .map(|&beta| {
            let noise = NoiseConfig { weight_noise_beta: beta, adc_noise_enabled: false, ..base };
            let out = run_on::<S>(&spec.clone().with_noise(noise), &data)?;
            Ok(WeightNoiseRow { beta, report: out.report })
        })
        .collect::<Result<Vec<_>>>()?;
    let adc_grid: Vec<(u32, bool)> = adc_bits.iter().flat_map(|&a| adc_flags.iter().map(move |&f| (a, f))).collect();
    let adc_noise = adc_grid
        .par_iter()
        .map(|&(a, on)| {
            let noise = NoiseConfig { weight_noise_beta: 0.0, adc_noise_enabled: on, ..base };
            let cell = spec.clone().with_noise(noise).with_bits(Some(Bitwidths::new(bits.weight, a)));
            let out = run_on::<S>(&cell, &data)?;
            Ok(AdcNoiseRow { adc_dac_bits: a, adc_noise: on, report: out.report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NoiseSweep { weight_noise, adc_noise })
}
