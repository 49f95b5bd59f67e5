//! Quantization-aware training and evaluation.
//!
//! In quantized mode every forward pass, for training and evaluation alike,
//! runs through the crossbar model: weights are programmed from the latent
//! full-precision copy at the start of each minibatch, inputs and hidden
//! states pass the DACs, and gate pre-activations pass the ADCs and lookup
//! tables. Gradients reach the latent weights through the straight-through
//! rule at each of those quantizers.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::crossbar::{forward_sequence_with, luts_for, program, CrossbarConfig, NoiseConfig, ProgrammedArray};
use crate::quantizer::{ActivationLut, QuantSpec};
use crate::error::{Error, Result};
use crate::lstm::{forward_sequence_ref, lstm_backward, LstmState, SequenceCache};
use crate::model::{step_targets, Model, ModelGrads, ParamGroup, SeqScore};
use crate::scalar::Scalar;
use crate::seed::{stream_rng, Rng};
use crate::tasks::{DatasetSplits, SeqInput, SequenceDataset, Split, TaskKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Sgd,
    Adam,
}

/// When the ADC ranges are measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    /// From the initial weights, before any update; the ADCs are in place
    /// for all of training.
    Initial,
    /// After a first epoch trained with the ADCs bypassed.
    #[default]
    FirstEpoch,
}

/// How a calibration pass turns observed pre-activations into an ADC range.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeRule {
    /// The `adc_percentile` percentile of `|z|`.
    #[default]
    Percentile,
    /// The symmetric range whose ADC grid has the least mean squared error on
    /// the observed values.
    MinMse,
}

/// Converter and weight resolutions of the quantized cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bitwidths {
    pub weight: u32,
    pub adc: u32,
    pub dac: u32,
}

impl Bitwidths {
    /// Weight bits plus one shared ADC/DAC width.
    pub fn new(weight: u32, adc_dac: u32) -> Self {
        Self { weight, adc: adc_dac, dac: adc_dac }
    }
}

impl std::fmt::Display for Bitwidths {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "w{}/adc{}/dac{}", self.weight, self.adc, self.dac)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Truncation length of backpropagation through time; longer sequences
    /// are processed in chunks with the state carried across.
    pub bptt_length: usize,
    pub seed: u64,
    /// `None` trains the floating-point reference cell.
    pub bitwidths: Option<Bitwidths>,
    pub noise: NoiseConfig,
    /// Global gradient-norm clip.
    pub grad_clip: f64,
    /// Weight grid is `[-w_max, w_max]`; latent weights are kept inside it.
    pub w_max: f64,
    pub adc_range_rule: RangeRule,
    /// Percentile of `|pre-activation|` used by [`RangeRule::Percentile`].
    pub adc_percentile: f64,
    /// Fixed ADC ranges (one for all blocks, or one per block) instead of calibration.
    pub adc_range: Option<Vec<f64>>,
    pub calibration: Calibration,
    /// Training sequences scanned by the calibration pass.
    pub calibration_samples: usize,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Sgd,
            learning_rate: 1.0,
            epochs: 10,
            batch_size: 16,
            bptt_length: 32,
            seed: 0,
            bitwidths: None,
            noise: NoiseConfig::default(),
            grad_clip: 5.0,
            w_max: 1.0,
            adc_range_rule: RangeRule::default(),
            adc_percentile: 99.9,
            adc_range: None,
            calibration: Calibration::default(),
            calibration_samples: 512,
            init_scale: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be finite and non-negative", self.learning_rate));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.bptt_length == 0 {
            return bad("epochs, batch size and BPTT length must be positive".into());
        }
        if let Some(b) = self.bitwidths {
            for (name, v) in [("weight", b.weight), ("ADC", b.adc), ("DAC", b.dac)] {
                if !(1..=crate::quantizer::MAX_BITS).contains(&v) {
                    return bad(format!("{name} bit width {v} outside 1..=16"));
                }
            }
        }
        self.noise.validate()?;
        if self.noise.is_active() && self.bitwidths.is_none() {
            return bad("noise injection needs a quantized (crossbar) configuration".into());
        }
        if !(self.grad_clip > 0.0) || !(self.w_max > 0.0) {
            return bad("grad_clip and w_max must be positive".into());
        }
        // The initializer samples `[-s, s]`, whose width must stay finite.
        if !(self.init_scale >= 0.0 && (2.0 * self.init_scale).is_finite()) {
            return bad(format!("init_scale {:e} must be non-negative and finite", self.init_scale));
        }
        if !(self.adc_percentile > 0.0 && self.adc_percentile <= 100.0) {
            return bad(format!("ADC percentile {} outside (0, 100]", self.adc_percentile));
        }
        if let Some(r) = &self.adc_range {
            if !(r.len() == 1 || r.len() == 4) || r.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return bad("adc_range needs one or four positive values".into());
            }
        }
        if self.calibration_samples == 0 {
            return bad("calibration_samples must be positive".into());
        }
        Ok(())
    }

    /// Crossbar for `model` at the configured resolutions, with any fixed ADC ranges applied.
    pub fn crossbar_for<S: Scalar>(&self, model: &Model<S>) -> Result<Option<CrossbarConfig<S>>> {
        let Some(b) = self.bitwidths else { return Ok(None) };
        let cfg = CrossbarConfig::lstm(model.input_size(), model.hidden_size(), b.weight, b.dac, b.adc, S::lit(self.w_max))?;
        Ok(Some(match &self.adc_range {
            Some(r) => cfg.with_adc_ranges(expand_ranges(r))?,
            None => cfg,
        }))
    }
}

fn expand_ranges<S: Scalar>(r: &[f64]) -> Vec<S> {
    let r: Vec<S> = r.iter().map(|&v| S::lit(v)).collect();
    if r.len() == 1 { vec![r[0]; 4] } else { r }
}

/// A model with the crossbar it runs on (`None` for the floating-point cell).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<S> {
    pub model: Model<S>,
    pub crossbar: Option<CrossbarConfig<S>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Perplexity,
}

impl Metric {
    pub fn for_task(kind: TaskKind) -> Self {
        if kind.is_lm() { Metric::Perplexity } else { Metric::Accuracy }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Metric::Accuracy => a > b,
            Metric::Perplexity => a < b,
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Accuracy => "accuracy",
            Metric::Perplexity => "perplexity",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub split: Split,
    pub metric: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: TaskKind,
    pub split: Split,
    pub metric: Metric,
    pub accuracy: f64,
    /// `exp` of the mean negative log-likelihood per target.
    pub perplexity: f64,
    pub mean_nll: f64,
    pub targets: usize,
    /// Per-epoch metric; training points are running averages over the epoch.
    pub curve: Vec<CurvePoint>,
}

impl EvalReport {
    fn from_score(task: TaskKind, split: Split, score: SeqScore) -> Self {
        let mean_nll = score.nll / score.targets as f64;
        Self {
            task,
            split,
            metric: Metric::for_task(task),
            accuracy: score.correct as f64 / score.targets as f64,
            perplexity: mean_nll.exp(),
            mean_nll,
            targets: score.targets,
            curve: Vec::new(),
        }
    }

    /// Accuracy for classification, perplexity for language models.
    pub fn value(&self) -> f64 {
        match self.metric {
            Metric::Accuracy => self.accuracy,
            Metric::Perplexity => self.perplexity,
        }
    }
}

/// Result of [`train`]: final reports on both splits and the learning curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train: EvalReport,
    pub valid: EvalReport,
    pub curve: Vec<CurvePoint>,
    /// Frozen ADC range of each gate block, when quantized.
    pub adc_ranges: Option<Vec<f64>>,
}

/// Forward engine shared by training and evaluation.
struct Runner<'a, S: Scalar> {
    crossbar: Option<&'a CrossbarConfig<S>>,
    array: Option<ProgrammedArray<S>>,
    luts: Option<&'a [ActivationLut<S>; 4]>,
    noise: NoiseConfig,
    bptt: usize,
}

impl<'a, S: Scalar> Runner<'a, S> {
    fn new(
        model: &Model<S>,
        crossbar: Option<&'a CrossbarConfig<S>>,
        luts: Option<&'a [ActivationLut<S>; 4]>,
        noise: NoiseConfig,
        bptt: usize,
    ) -> Result<Self> {
        let array = crossbar.map(|cfg| program(model.lstm.weights(), cfg)).transpose()?;
        Ok(Self { crossbar, array, luts, noise, bptt })
    }

    fn forward(&self, model: &Model<S>, xs: &[Vec<S>], init: &LstmState<S>, rng: &mut Rng) -> Result<SequenceCache<S>> {
        match (self.crossbar, &self.array) {
            (Some(cfg), Some(arr)) => forward_sequence_with(arr, cfg, self.luts, &self.noise, Some(rng), xs, init),
            _ => forward_sequence_ref(&model.lstm, xs, init),
        }
    }

    /// Scores one sample, accumulating gradients of the summed NLL into `grads` if given.
    fn run_sample(
        &self,
        model: &Model<S>,
        input: &SeqInput,
        targets: &[Option<u32>],
        rng: &mut Rng,
        mut grads: Option<&mut ModelGrads<S>>,
        mut observe: Option<&mut dyn FnMut(&SequenceCache<S>)>,
    ) -> Result<SeqScore> {
        let xs = model.encode(input)?;
        let tokens = match input {
            SeqInput::Tokens(t) => Some(t.as_slice()),
            SeqInput::Dense(_) => None,
        };
        let mut state = LstmState::zeros(model.hidden_size());
        let mut total = SeqScore::default();
        for start in (0..xs.len()).step_by(self.bptt) {
            let end = (start + self.bptt).min(xs.len());
            let cache = self.forward(model, &xs[start..end], &state, rng)?;
            if let Some(f) = observe.as_deref_mut() {
                f(&cache);
            }
            let tg = &targets[start..end];
            let (score, dh) = model.head_pass(&cache, tg, grads.as_deref_mut());
            if let Some(g) = grads.as_deref_mut() {
                if score.targets > 0 {
                    let cell = lstm_backward(&model.lstm, &cache, &dh)?;
                    model.accumulate_cell_grads(tokens.map(|t| &t[start..end]), &cell, g);
                }
            }
            total += score;
            state = cache.final_state().expect("chunk is non-empty");
        }
        Ok(total)
    }
}

fn gate_luts<S: Scalar>(crossbar: Option<&CrossbarConfig<S>>) -> Result<Option<[ActivationLut<S>; 4]>> {
    Ok(match crossbar {
        Some(cfg) => luts_for(cfg)?,
        None => None,
    })
}

/// Scores `data` with `net`. Noise draws come from a dedicated evaluation
/// stream, so repeated evaluations are identical.
pub fn evaluate<S: Scalar>(net: &TrainedModel<S>, data: &SequenceDataset, cfg: &TrainConfig) -> Result<EvalReport> {
    net.model.check_dataset(data)?;
    let luts = gate_luts(net.crossbar.as_ref())?;
    let runner = Runner::new(&net.model, net.crossbar.as_ref(), luts.as_ref(), cfg.noise, cfg.bptt_length)?;
    let mut rng = stream_rng(cfg.seed, "noise/eval");
    let mut score = SeqScore::default();
    for s in &data.samples {
        let tg = step_targets(&s.target, s.input.len());
        score += runner.run_sample(&net.model, &s.input, &tg, &mut rng, None, None)?;
    }
    if score.targets == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(EvalReport::from_score(data.kind, data.split, score))
}

struct AdamState<S> {
    m: Vec<S>,
    v: Vec<S>,
    t: i32,
}

fn apply_update<S: Scalar>(
    model: &mut Model<S>,
    grads: &ModelGrads<S>,
    cfg: &TrainConfig,
    adam: &mut Option<AdamState<S>>,
    clip_cell: Option<S>,
) {
    let lr = S::lit(cfg.learning_rate);
    let mut offset = 0;
    if let Some(a) = adam.as_mut() {
        a.t += 1;
    }
    for (group, params, g) in model.zip_params(grads) {
        match adam.as_mut() {
            None => {
                for (p, &d) in params.iter_mut().zip(g) {
                    *p -= lr * d;
                }
            }
            Some(a) => {
                let (b1, b2, eps) = (S::lit(0.9), S::lit(0.999), S::lit(1e-8));
                let c1 = S::one() - b1.powi(a.t);
                let c2 = S::one() - b2.powi(a.t);
                for (k, (p, &d)) in params.iter_mut().zip(g).enumerate() {
                    let m = &mut a.m[offset + k];
                    let v = &mut a.v[offset + k];
                    *m = b1 * *m + (S::one() - b1) * d;
                    *v = b2 * *v + (S::one() - b2) * d * d;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
        offset += params.len();
        if let (ParamGroup::Cell, Some(w)) = (group, clip_cell) {
            params.iter_mut().for_each(|p| *p = p.max(-w).min(w));
        }
    }
}

fn param_count<S: Scalar>(model: &Model<S>) -> usize {
    model.lstm.weights().as_slice().len()
        + model.head.as_slice().len()
        + model.head_bias.len()
        + model.embedding.as_ref().map_or(0, |e| e.as_slice().len())
}

/// Nearest-rank percentile of `|z|` for each of the four gate blocks.
fn calibrate_ranges<S: Scalar>(samples: [Vec<S>; 4], percentile: f64) -> Vec<S> {
    samples.into_iter().map(|v| percentile_range(v, percentile)).collect()
}

fn percentile_range<S: Scalar>(mut v: Vec<S>, percentile: f64) -> S {
    if v.is_empty() {
        return S::one();
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite pre-activations"));
    // The small offset keeps exact ranks like 0.999 * 1000 from rounding up.
    let rank = ((percentile / 100.0) * v.len() as f64 - 1e-9).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1].max(S::lit(1e-6))
}

const MSE_CANDIDATES: usize = 256;
const MSE_MAX_SAMPLES: usize = 16384;

/// Range in `(0, max |z|]` minimising the mean squared error of a `bits`-bit
/// symmetric grid over the magnitudes in `v`, searched on a uniform lattice.
fn min_mse_range<S: Scalar>(v: &[S], bits: u32) -> Result<S> {
    let Some(top) = v.iter().copied().reduce(|a, b| a.max(b)).filter(|t| *t > S::zero()) else {
        return Ok(S::one());
    };
    let stride = v.len().div_ceil(MSE_MAX_SAMPLES);
    let sample: Vec<S> = v.iter().step_by(stride).copied().collect();
    let mut best = (S::infinity(), top);
    for k in 1..=MSE_CANDIDATES {
        let r = top * S::lit(k as f64 / MSE_CANDIDATES as f64);
        let spec = QuantSpec::symmetric(bits, r)?;
        let err = sample.iter().fold(S::zero(), |acc, &z| {
            let d = spec.quantize(z) - z;
            acc + d * d
        });
        if err < best.0 {
            best = (err, r);
        }
    }
    Ok(best.1.max(S::lit(1e-6)))
}

/// One epoch over `data` in the order given by `order`; returns the running score.
#[allow(clippy::too_many_arguments)]
fn run_epoch<S: Scalar>(
    net: &mut TrainedModel<S>,
    data: &SequenceDataset,
    order: &[usize],
    cfg: &TrainConfig,
    adam: &mut Option<AdamState<S>>,
    noise_rng: &mut Rng,
    step: &mut usize,
) -> Result<SeqScore> {
    let clip = S::lit(cfg.grad_clip);
    let clip_cell = cfg.bitwidths.map(|_| S::lit(cfg.w_max));
    let mut epoch_score = SeqScore::default();
    let crossbar = net.crossbar.clone();
    let luts = gate_luts(crossbar.as_ref())?;
    for batch in order.chunks(cfg.batch_size) {
        let runner = Runner::new(&net.model, crossbar.as_ref(), luts.as_ref(), cfg.noise, cfg.bptt_length)?;
        let mut grads = ModelGrads::zeros_like(&net.model);
        let mut score = SeqScore::default();
        for &k in batch {
            let s = &data.samples[k];
            let tg = step_targets(&s.target, s.input.len());
            score += runner.run_sample(&net.model, &s.input, &tg, noise_rng, Some(&mut grads), None)?;
        }
        if score.targets > 0 {
            grads.scale(S::one() / S::lit(score.targets as f64));
        }
        if !score.nll.is_finite() || !grads.is_finite() {
            return Err(Error::Divergence { step: *step, loss: score.nll / score.targets.max(1) as f64 });
        }
        let norm = grads.norm();
        if norm > clip {
            grads.scale(clip / norm);
        }
        apply_update(&mut net.model, &grads, cfg, adam, clip_cell);
        if !net.model.is_finite() {
            return Err(Error::Divergence { step: *step, loss: score.nll / score.targets.max(1) as f64 });
        }
        epoch_score += score;
        *step += 1;
    }
    Ok(epoch_score)
}

/// Forward-only pass that freezes each gate block's ADC range at the
/// configured percentile of the `|pre-activation|` it observes.
fn calibrate<S: Scalar>(net: &mut TrainedModel<S>, data: &SequenceDataset, cfg: &TrainConfig) -> Result<Vec<S>> {
    let mut xcfg = net.crossbar.clone().expect("quantized run");
    xcfg.adc_ranges = None;
    let n = net.model.hidden_size();
    let runner = Runner::new(&net.model, Some(&xcfg), None, cfg.noise, cfg.bptt_length)?;
    let mut rng = stream_rng(cfg.seed, "noise/calibration");
    let mut seen: [Vec<S>; 4] = Default::default();
    let mut observe = |cache: &SequenceCache<S>| {
        for step in cache.steps() {
            for (j, &z) in step.activation_inputs().iter().enumerate() {
                seen[j / n].push(z.abs());
            }
        }
    };
    for s in data.samples.iter().take(cfg.calibration_samples) {
        let tg = step_targets(&s.target, s.input.len());
        runner.run_sample(&net.model, &s.input, &tg, &mut rng, None, Some(&mut observe))?;
    }
    match cfg.adc_range_rule {
        RangeRule::Percentile => Ok(calibrate_ranges(seen, cfg.adc_percentile)),
        RangeRule::MinMse => {
            let bits = cfg.bitwidths.expect("quantized run").adc;
            seen.iter().map(|v| min_mse_range(v, bits)).collect()
        }
    }
}

/// Trains `model` on `data.train`, validating on `data.valid` after each epoch.
///
/// Without a fixed `adc_range`, a forward pass over the training set with the
/// ADCs bypassed sets the ADC ranges, either before the first update or after
/// the first epoch (see [`Calibration`]). The ranges then stay frozen for the
/// rest of training and for evaluation.
pub fn train<S: Scalar>(model: Model<S>, data: &DatasetSplits, cfg: &TrainConfig) -> Result<(TrainedModel<S>, TrainReport)> {
    cfg.validate()?;
    model.check_dataset(&data.train)?;
    model.check_dataset(&data.valid)?;
    let crossbar = cfg.crossbar_for(&model)?;
    let mut net = TrainedModel { model, crossbar };
    let mut adam = (cfg.optimizer == Optimizer::Adam).then(|| {
        let k = param_count(&net.model);
        AdamState { m: vec![S::zero(); k], v: vec![S::zero(); k], t: 0 }
    });
    let mut shuffle = stream_rng(cfg.seed, "shuffle");
    let mut noise_rng = stream_rng(cfg.seed, "noise");
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut curve = Vec::new();
    let mut step = 0;
    let metric = Metric::for_task(data.train.kind);

    let freeze_ranges = |net: &mut TrainedModel<S>| -> Result<()> {
        if let Some(xcfg) = net.crossbar.clone() {
            let ranges = calibrate(net, &data.train, cfg)?;
            net.crossbar = Some(xcfg.with_adc_ranges(ranges)?);
        }
        Ok(())
    };
    let needs_calibration = cfg.adc_range.is_none();
    if needs_calibration && cfg.calibration == Calibration::Initial {
        freeze_ranges(&mut net)?;
    }
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle);
        let score = run_epoch(&mut net, &data.train, &order, cfg, &mut adam, &mut noise_rng, &mut step)?;
        if epoch == 1 && needs_calibration && cfg.calibration == Calibration::FirstEpoch {
            freeze_ranges(&mut net)?;
        }
        let running = EvalReport::from_score(data.train.kind, Split::Train, score);
        curve.push(CurvePoint { epoch, split: Split::Train, metric: running.value() });
        let valid = evaluate(&net, &data.valid, cfg)?;
        curve.push(CurvePoint { epoch, split: Split::Valid, metric: valid.value() });
    }

    let mut valid = evaluate(&net, &data.valid, cfg)?;
    let mut train = evaluate(&net, &data.train, cfg)?;
    valid.curve = curve.iter().filter(|p| p.split == Split::Valid).copied().collect();
    train.curve = curve.iter().filter(|p| p.split == Split::Train).copied().collect();
    debug_assert_eq!(valid.metric, metric);
    let adc_ranges = net.crossbar.as_ref().and_then(|c| c.adc_ranges.as_ref()).map(|r| r.iter().map(|v| v.as_f64()).collect());
    Ok((net, TrainReport { train, valid, curve, adc_ranges }))
}
