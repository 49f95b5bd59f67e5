//! Datasets for the three task shapes: sequence classification, character
//! language modelling and word language modelling.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::stream_rng;

mod har;
mod text;

pub use har::{synth_har, HAR_CHANNELS, HAR_CLASSES, HAR_STEPS};
pub use text::{
    bundled_char_corpus, bundled_word_corpus, load_char_corpus, load_word_corpus, parse_char_corpus,
    parse_word_corpus, CharCorpusOptions, CharVocab, WordVocab, BUNDLED_NAMES, BUNDLED_WORDS,
    CHAR_INPUT_DIM, UNKNOWN_WORD, WORD_EMBEDDING_DIM,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Classification,
    CharLm,
    WordLm,
}

impl TaskKind {
    pub fn is_lm(self) -> bool {
        !matches!(self, TaskKind::Classification)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Valid,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Valid => "valid",
        })
    }
}

/// Input side of one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SeqInput {
    /// Symbol indices, expanded by the model (one-hot or embedding).
    Tokens(Vec<u32>),
    /// Real-valued frames of `input_dim` channels.
    Dense(Vec<Vec<f64>>),
}

impl SeqInput {
    pub fn len(&self) -> usize {
        match self {
            SeqInput::Tokens(t) => t.len(),
            SeqInput::Dense(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// Next-symbol target for every step.
    PerStep(Vec<u32>),
    /// One class label read off the last step.
    Label(u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub input: SeqInput,
    pub target: Target,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceDataset {
    pub kind: TaskKind,
    /// Width of the vector fed to the cell at each step.
    pub input_dim: usize,
    /// Number of input symbols for token inputs (one-hot width or embedding rows).
    pub input_vocab: usize,
    /// Classes or output vocabulary size.
    pub num_outputs: usize,
    pub split: Split,
    pub samples: Vec<Sample>,
}

impl SequenceDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of predictions the dataset scores (steps for LMs, sequences otherwise).
    pub fn num_targets(&self) -> usize {
        self.samples
            .iter()
            .map(|s| match &s.target {
                Target::PerStep(t) => t.len(),
                Target::Label(_) => 1,
            })
            .sum()
    }

    /// Checks the structural invariants: consistent widths, indices in range,
    /// target and input lengths equal.
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (k, s) in self.samples.iter().enumerate() {
            let bad = |msg: String| Err(Error::Config(format!("sample {k}: {msg}")));
            if s.input.is_empty() {
                return bad("empty sequence".into());
            }
            match &s.input {
                SeqInput::Tokens(t) => {
                    if let Some(&i) = t.iter().find(|&&i| i as usize >= self.input_vocab) {
                        return bad(format!("input symbol {i} >= {}", self.input_vocab));
                    }
                }
                SeqInput::Dense(d) => {
                    if let Some(f) = d.iter().find(|f| f.len() != self.input_dim) {
                        return bad(format!("frame width {} != {}", f.len(), self.input_dim));
                    }
                }
            }
            match &s.target {
                Target::PerStep(t) => {
                    if t.len() != s.input.len() {
                        return bad(format!("{} targets for {} steps", t.len(), s.input.len()));
                    }
                    if let Some(&i) = t.iter().find(|&&i| i as usize >= self.num_outputs) {
                        return bad(format!("target {i} >= {}", self.num_outputs));
                    }
                }
                Target::Label(l) => {
                    if *l as usize >= self.num_outputs {
                        return bad(format!("label {l} >= {}", self.num_outputs));
                    }
                }
            }
        }
        Ok(())
    }

    /// Deterministic disjoint train/valid partition; `valid_fraction` of the
    /// samples (at least one) go to validation.
    pub fn split(self, valid_fraction: f64, seed: u64) -> Result<DatasetSplits> {
        if !(0.0..1.0).contains(&valid_fraction) {
            return Err(Error::Config(format!("valid fraction {valid_fraction} outside [0, 1)")));
        }
        if self.samples.len() < 2 {
            return Err(Error::EmptyDataset);
        }
        let header = self.header();
        let mut order: Vec<usize> = (0..self.samples.len()).collect();
        order.shuffle(&mut stream_rng(seed, "data/split"));
        let n_valid = ((self.samples.len() as f64 * valid_fraction).round() as usize).clamp(1, self.samples.len() - 1);
        let mut is_valid = vec![false; self.samples.len()];
        for &i in &order[..n_valid] {
            is_valid[i] = true;
        }
        let (mut train, mut valid) = (Vec::new(), Vec::new());
        for (s, v) in self.samples.into_iter().zip(is_valid) {
            if v { valid.push(s) } else { train.push(s) }
        }
        let make = |split, samples| SequenceDataset { split, samples, ..header.clone() };
        Ok(DatasetSplits { train: make(Split::Train, train), valid: make(Split::Valid, valid) })
    }

    fn header(&self) -> SequenceDataset {
        SequenceDataset {
            kind: self.kind,
            input_dim: self.input_dim,
            input_vocab: self.input_vocab,
            num_outputs: self.num_outputs,
            split: self.split,
            samples: Vec::new(),
        }
    }

    /// Deterministic random subset of at most `n` samples, original order kept.
    pub fn subsample(mut self, n: usize, seed: u64) -> Self {
        if n < self.samples.len() {
            let mut keep: Vec<usize> = (0..self.samples.len()).collect();
            keep.shuffle(&mut stream_rng(seed, "data/subsample"));
            let mut mask = vec![false; self.samples.len()];
            keep[..n].iter().for_each(|&i| mask[i] = true);
            let mut it = mask.into_iter();
            self.samples.retain(|_| it.next().unwrap_or(false));
        }
        self
    }

    /// First `n` samples.
    pub fn truncated(mut self, n: usize) -> Self {
        self.samples.truncate(n);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplits {
    pub train: SequenceDataset,
    pub valid: SequenceDataset,
}

impl DatasetSplits {
    pub fn manifest(&self, seed: u64, source: &str) -> DatasetManifest {
        DatasetManifest {
            kind: self.train.kind,
            source: source.to_string(),
            seed,
            input_dim: self.train.input_dim,
            input_vocab: self.train.input_vocab,
            num_outputs: self.train.num_outputs,
            train_sequences: self.train.len(),
            valid_sequences: self.valid.len(),
            train_targets: self.train.num_targets(),
            valid_targets: self.valid.num_targets(),
        }
    }
}

/// Summary written next to experiment outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub kind: TaskKind,
    pub source: String,
    pub seed: u64,
    pub input_dim: usize,
    pub input_vocab: usize,
    pub num_outputs: usize,
    pub train_sequences: usize,
    pub valid_sequences: usize,
    pub train_targets: usize,
    pub valid_targets: usize,
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
