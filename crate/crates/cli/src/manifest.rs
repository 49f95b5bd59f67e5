use std::collections::BTreeMap;

use nvm_lstm::seed::derive_seed;
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Tag that lets `--config` accept a manifest in place of a config file.
pub const MANIFEST_FORMAT: &str = "nvm-lstm-manifest/1";

/// Streams derived from the root seed, listed for provenance.
const STREAMS: [&str; 4] = ["data", "init", "shuffle", "noise"];

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub format: &'static str,
    pub versions: BTreeMap<&'static str, &'static str>,
    pub seeds: Option<Seeds>,
    pub config: &'a ExperimentConfig,
}

#[derive(Debug, Serialize)]
pub struct Seeds {
    pub root: u64,
    pub streams: BTreeMap<&'static str, u64>,
}

impl<'a> Manifest<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Self {
        let versions = BTreeMap::from([("nvm-lstm", nvm_lstm::VERSION), ("nvm-lstm-cli", env!("CARGO_PKG_VERSION"))]);
        let seeds = config.experiment.as_ref().map(|e| {
            let root = e.train.seed;
            Seeds { root, streams: STREAMS.iter().map(|&s| (s, derive_seed(root, s))).collect() }
        });
        Self { format: MANIFEST_FORMAT, versions, seeds, config }
    }
}
