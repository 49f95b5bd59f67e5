use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::Gate;
use crate::quantizer::{build_lut, ActivationLut, QuantSpec};
use crate::scalar::Scalar;

/// Geometry, device and converter settings of one weight array.
///
/// Inputs are bipolar DAC voltages in `[-v_read, v_read]`. Weights map to a
/// signed effective conductance (a differential pair `G+ - G-`) linearly
/// through the origin, so the largest weight magnitude becomes `g_max - g_min`.
/// ADC full-scale ranges are expressed in pre-activation units, one symmetric
/// range per column group (the four gate blocks for an LSTM array).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossbarConfig<S> {
    pub rows: usize,
    pub cols: usize,
    /// Siemens.
    pub g_min: S,
    /// Siemens.
    pub g_max: S,
    /// DAC full-scale amplitude in volts.
    pub v_read: S,
    pub weight_spec: QuantSpec<S>,
    /// DAC grid in volts.
    pub dac_spec: QuantSpec<S>,
    pub adc_bits: u32,
    /// Symmetric ADC range per column group; `None` bypasses the ADC.
    pub adc_ranges: Option<Vec<S>>,
    pub num_adcs: usize,
    /// Per-column conversion latency in seconds.
    pub t_col: S,
}

pub const DEFAULT_G_MIN: f64 = 1e-7;
pub const DEFAULT_G_MAX: f64 = 1e-5;
pub const DEFAULT_V_READ: f64 = 1.0;
pub const DEFAULT_T_COL: f64 = 6.25e-9;
pub const MAX_ADCS: usize = 64;

impl<S: Scalar> CrossbarConfig<S> {
    /// Array for an LSTM with input size `m` and hidden size `n`: `(m+n) x 4n`.
    ///
    /// The ADC is left uncalibrated; set `adc_ranges` before quantized reads.
    pub fn lstm(m: usize, n: usize, weight_bits: u32, dac_bits: u32, adc_bits: u32, w_max: S) -> Result<Self> {
        let cols = 4 * n;
        let v_read = S::lit(DEFAULT_V_READ);
        let cfg = Self {
            rows: m + n,
            cols,
            g_min: S::lit(DEFAULT_G_MIN),
            g_max: S::lit(DEFAULT_G_MAX),
            v_read,
            weight_spec: QuantSpec::symmetric(weight_bits, w_max)?,
            dac_spec: QuantSpec::symmetric(dac_bits, v_read)?,
            adc_bits,
            adc_ranges: None,
            num_adcs: default_num_adcs(cols),
            t_col: S::lit(DEFAULT_T_COL),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_adc_ranges(mut self, ranges: Vec<S>) -> Result<Self> {
        self.adc_ranges = Some(ranges);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config("array must have at least one row and column".into()));
        }
        if self.num_adcs == 0 || !self.cols.is_multiple_of(self.num_adcs) {
            return Err(Error::Config(format!("{} columns not divisible by {} ADCs", self.cols, self.num_adcs)));
        }
        if !(self.g_min >= S::zero() && self.g_min < self.g_max) {
            return Err(Error::Config(format!("conductance range [{}, {}] invalid", self.g_min, self.g_max)));
        }
        if !(self.v_read > S::zero()) {
            return Err(Error::Config("read voltage must be positive".into()));
        }
        if !(1..=crate::quantizer::MAX_BITS).contains(&self.adc_bits) {
            return Err(Error::Config(format!("ADC bit width {} outside 1..=16", self.adc_bits)));
        }
        if let Some(r) = &self.adc_ranges {
            if r.is_empty() || !self.cols.is_multiple_of(r.len()) {
                return Err(Error::Config(format!("{} ADC ranges do not tile {} columns", r.len(), self.cols)));
            }
            if r.iter().any(|&v| !(v > S::zero()) || !v.is_finite()) {
                return Err(Error::Config("ADC ranges must be positive and finite".into()));
            }
        }
        Ok(())
    }

    pub fn mux_ratio(&self) -> usize {
        self.cols / self.num_adcs
    }

    /// Time for all columns to pass through the shared ADCs.
    pub fn conversion_time(&self) -> S {
        S::lit(self.mux_ratio() as f64) * self.t_col
    }

    /// Largest weight magnitude on the grid.
    pub fn weight_scale(&self) -> S {
        self.weight_spec.v_min().abs().max(self.weight_spec.v_max().abs())
    }

    pub fn g_range(&self) -> S {
        self.g_max - self.g_min
    }

    /// Siemens per weight unit.
    pub fn conductance_per_weight(&self) -> S {
        self.g_range() / self.weight_scale()
    }

    /// Converts a column current (amps) into pre-activation units.
    pub fn current_to_preactivation(&self) -> S {
        self.weight_scale() / (self.v_read * self.g_range())
    }

    /// DAC grid rescaled to unitless `[-1, 1]` signal values.
    pub fn signal_spec(&self) -> QuantSpec<S> {
        QuantSpec::new(self.dac_spec.bits(), self.dac_spec.v_min() / self.v_read, self.dac_spec.v_max() / self.v_read)
            .expect("scaled DAC grid stays valid")
    }

    pub fn adc_groups(&self) -> usize {
        self.adc_ranges.as_ref().map_or(1, Vec::len)
    }

    /// ADC grid (pre-activation units) for column group `group`.
    pub fn adc_spec(&self, group: usize) -> Option<QuantSpec<S>> {
        let r = *self.adc_ranges.as_ref()?.get(group)?;
        Some(QuantSpec::symmetric(self.adc_bits, r).expect("validated ADC range"))
    }

    /// Same grid expressed as a column current full scale (amps).
    pub fn adc_current_spec(&self, group: usize) -> Option<QuantSpec<S>> {
        let r = *self.adc_ranges.as_ref()?.get(group)?;
        QuantSpec::symmetric(self.adc_bits, r / self.current_to_preactivation()).ok()
    }

    /// Lookup tables for the four LSTM gate blocks, indexed by ADC code.
    pub fn gate_luts(&self) -> Option<[ActivationLut<S>; 4]> {
        if self.adc_groups() != 4 {
            return None;
        }
        let luts = Gate::ALL.map(|g| {
            let (lo, hi) = g.activation().output_range::<S>();
            let out = QuantSpec::new(self.adc_bits, lo, hi).expect("activation range is valid");
            self.adc_spec(g.block()).map(|input| build_lut(g.activation(), input, out))
        });
        let [a, b, c, d] = luts;
        Some([a?, b?, c?, d?])
    }
}

fn default_num_adcs(cols: usize) -> usize {
    (1..=MAX_ADCS.min(cols)).rev().find(|d| cols.is_multiple_of(*d)).unwrap_or(1)
}

/// Injected noise sources.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    #[serde(default)]
    pub adc_noise_enabled: bool,
    /// Weight-noise standard deviation as a fraction of the weight range.
    #[serde(default)]
    pub weight_noise_beta: f64,
    #[serde(default)]
    pub seed: u64,
    /// Draw fresh weight noise on every read; otherwise once per sequence.
    #[serde(default = "default_true")]
    pub resample_per_read: bool,
}

fn default_true() -> bool {
    true
}

pub const MAX_WEIGHT_NOISE_BETA: f64 = 0.2;

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { adc_noise_enabled: false, weight_noise_beta: 0.0, seed: 0, resample_per_read: true }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=MAX_WEIGHT_NOISE_BETA).contains(&self.weight_noise_beta) {
            return Err(Error::NoiseRatio(self.weight_noise_beta));
        }
        Ok(())
    }

    pub fn weight_noise_enabled(&self) -> bool {
        self.weight_noise_beta > 0.0
    }

    pub fn is_active(&self) -> bool {
        self.adc_noise_enabled || self.weight_noise_enabled()
    }

    /// `σ = β (w_max - w_min)` in weight units.
    pub fn weight_sigma<S: Scalar>(&self, weight_spec: &QuantSpec<S>) -> S {
        S::lit(self.weight_noise_beta) * weight_spec.range()
    }
}

/// ADC noise standard deviation: `(V_max - V_min) / (2^N sqrt(12))`.
pub fn adc_noise_sigma<S: Scalar>(adc_spec: &QuantSpec<S>) -> S {
    adc_spec.noise_rms()
}
