//! Uniform quantization grids, the clipped straight-through gradient rule and
//! quantized activation lookup tables.
//!
//! A grid with `N` bits over `[v_min, v_max]` has `2^N` levels with both
//! endpoints representable, so the grid step is `(v_max - v_min) / (2^N - 1)`.
//! One bit therefore gives the binary set `{v_min, v_max}`. Rounding picks the
//! nearest level; exact ties go to the larger level.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};

pub const MAX_BITS: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantSpec<S> {
    bits: u32,
    v_min: S,
    v_max: S,
}

impl<S: Scalar> QuantSpec<S> {
    pub fn new(bits: u32, v_min: S, v_max: S) -> Result<Self> {
        if !(1..=MAX_BITS).contains(&bits) {
            return Err(Error::InvalidSpec(format!("bit width {bits} outside 1..={MAX_BITS}")));
        }
        if !v_min.is_finite() || !v_max.is_finite() || v_min >= v_max {
            return Err(Error::InvalidSpec(format!("range [{v_min}, {v_max}] is empty or non-finite")));
        }
        Ok(Self { bits, v_min, v_max })
    }

    /// Grid over `[-amplitude, amplitude]`.
    pub fn symmetric(bits: u32, amplitude: S) -> Result<Self> {
        Self::new(bits, -amplitude, amplitude)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn v_min(&self) -> S {
        self.v_min
    }

    pub fn v_max(&self) -> S {
        self.v_max
    }

    pub fn range(&self) -> S {
        self.v_max - self.v_min
    }

    /// Number of representable values, `2^N`.
    pub fn levels(&self) -> u32 {
        1u32 << self.bits
    }

    fn max_code(&self) -> u32 {
        self.levels() - 1
    }

    /// Grid step `Δq = range / (2^N - 1)`.
    pub fn step(&self) -> S {
        self.range() / S::lit(self.max_code() as f64)
    }

    /// Step used by the quantization-noise formula, `Δn = range / 2^N`.
    pub fn noise_step(&self) -> S {
        self.range() / S::lit(self.levels() as f64)
    }

    /// RMS quantization noise `Δn / sqrt(12)`.
    pub fn noise_rms(&self) -> S {
        self.noise_step() / S::lit(12f64.sqrt())
    }

    pub fn contains(&self, x: S) -> bool {
        self.v_min <= x && x <= self.v_max
    }

    pub fn clip(&self, x: S) -> S {
        x.max(self.v_min).min(self.v_max)
    }

    /// Nearest level index for `x`, clipping out-of-range inputs.
    ///
    /// NaN maps to code 0; use [`quantize`] when NaN must be rejected.
    #[inline]
    pub fn code(&self, x: S) -> u32 {
        if !(x > self.v_min) {
            return 0;
        }
        if x >= self.v_max {
            return self.max_code();
        }
        let max = S::lit(self.max_code() as f64);
        let t = (x - self.v_min) * max / self.range();
        let k = (t + S::lit(0.5)).floor();
        k.max(S::zero()).min(max).to_u32().unwrap_or(0)
    }

    /// Value of level `code`; endpoints are returned exactly.
    #[inline]
    pub fn value(&self, code: u32) -> S {
        let max = self.max_code();
        if code == 0 {
            return self.v_min;
        }
        if code >= max {
            return self.v_max;
        }
        let k = S::lit(code as f64);
        let rest = S::lit((max - code) as f64);
        (self.v_min * rest + self.v_max * k) / S::lit(max as f64)
    }

    #[inline]
    pub fn quantize(&self, x: S) -> S {
        self.value(self.code(x))
    }

    /// Every representable value in increasing order.
    pub fn grid(&self) -> impl Iterator<Item = S> + '_ {
        (0..self.levels()).map(move |k| self.value(k))
    }

    pub fn cast<T: Scalar>(&self) -> QuantSpec<T> {
        QuantSpec { bits: self.bits, v_min: T::lit(self.v_min.as_f64()), v_max: T::lit(self.v_max.as_f64()) }
    }
}

/// Snaps `x` to the nearest representable value of `spec`.
pub fn quantize<S: Scalar>(x: S, spec: &QuantSpec<S>) -> Result<S> {
    if x.is_nan() {
        return Err(Error::NanInput);
    }
    Ok(spec.quantize(x))
}

/// Clipped straight-through gradient: identity inside the grid range, zero outside.
#[inline]
pub fn ste_backward<S: Scalar>(upstream_grad: S, x: S, spec: &QuantSpec<S>) -> S {
    if spec.contains(x) {
        upstream_grad
    } else {
        S::zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Self::Sigmoid => sigmoid(x),
            Self::Tanh => x.tanh(),
        }
    }

    /// Derivative at input `x`.
    #[inline]
    pub fn derivative<S: Scalar>(self, x: S) -> S {
        match self {
            Self::Sigmoid => {
                let s = sigmoid(x);
                s * (S::one() - s)
            }
            Self::Tanh => {
                let t = x.tanh();
                S::one() - t * t
            }
        }
    }

    /// Natural output range.
    pub fn output_range<S: Scalar>(self) -> (S, S) {
        match self {
            Self::Sigmoid => (S::zero(), S::one()),
            Self::Tanh => (-S::one(), S::one()),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Self::Sigmoid),
            "tanh" => Ok(Self::Tanh),
            _ => Err(Error::UnsupportedActivation(s.to_string())),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sigmoid => "sigmoid",
            Self::Tanh => "tanh",
        })
    }
}

/// Quantized nonlinearity indexed by ADC code.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationLut<S> {
    activation: Activation,
    in_spec: QuantSpec<S>,
    out_spec: QuantSpec<S>,
    entries: Vec<S>,
}

impl<S: Scalar> ActivationLut<S> {
    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn in_spec(&self) -> &QuantSpec<S> {
        &self.in_spec
    }

    pub fn out_spec(&self) -> &QuantSpec<S> {
        &self.out_spec
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    #[inline]
    pub fn lookup(&self, code: u32) -> S {
        self.entries[code as usize]
    }
}

/// Tabulates `quantize(fn(level_k), out_spec)` for every input code `k`.
pub fn build_lut<S: Scalar>(activation: Activation, in_spec: QuantSpec<S>, out_spec: QuantSpec<S>) -> ActivationLut<S> {
    let entries = in_spec.grid().map(|v| out_spec.quantize(activation.apply(v))).collect();
    ActivationLut { activation, in_spec, out_spec, entries }
}

/// [`build_lut`] with the activation given by name (`"sigmoid"` or `"tanh"`).
pub fn build_lut_named<S: Scalar>(name: &str, in_spec: QuantSpec<S>, out_spec: QuantSpec<S>) -> Result<ActivationLut<S>> {
    Ok(build_lut(name.parse()?, in_spec, out_spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(bits: u32, lo: f64, hi: f64) -> QuantSpec<f64> {
        QuantSpec::new(bits, lo, hi).unwrap()
    }

    /// Brute-force nearest level: enumerate all levels, ties to the larger one.
    fn nearest_by_enumeration(x: f64, s: &QuantSpec<f64>) -> f64 {
        let n = s.levels() as usize;
        let pts: Vec<f64> = (0..n)
            .map(|k| s.v_min() + (s.v_max() - s.v_min()) * k as f64 / (n as f64 - 1.0))
            .collect();
        let mut best = pts[0];
        for &p in &pts {
            let (dp, db) = ((x - p).abs(), (x - best).abs());
            if dp < db - 1e-12 || ((dp - db).abs() <= 1e-12 && p > best) {
                best = p;
            }
        }
        best
    }

    #[test]
    fn zero_is_not_on_even_symmetric_grid() {
        let s = spec(4, -1.0, 1.0);
        let oracle = nearest_by_enumeration(0.0, &s);
        assert!((oracle - 1.0 / 15.0).abs() < 1e-15);
        assert_eq!(s.quantize(0.0), s.value(8));
        assert!((s.quantize(0.0) - oracle).abs() < 1e-15);
        assert!(s.grid().all(|v| v != 0.0));
    }

    #[test]
    fn out_of_range_clips() {
        assert_eq!(spec(2, -1.0, 1.0).quantize(1.7), 1.0);
        assert_eq!(spec(2, -1.0, 1.0).quantize(-3.0), -1.0);
    }

    #[test]
    fn one_bit_is_sign() {
        let s = spec(1, -1.0, 1.0);
        assert_eq!(s.quantize(0.0), 1.0);
        assert_eq!(s.quantize(1e-9), 1.0);
        assert_eq!(s.quantize(-1e-9), -1.0);
        assert_eq!(s.quantize(-0.7), -1.0);
        assert_eq!(s.grid().collect::<Vec<_>>(), vec![-1.0, 1.0]);
        assert_eq!(s.step(), 2.0);
    }

    #[test]
    fn nan_is_rejected() {
        assert!(matches!(quantize(f64::NAN, &spec(3, -1.0, 1.0)), Err(Error::NanInput)));
    }

    #[test]
    fn invalid_specs() {
        assert!(QuantSpec::new(0, -1.0, 1.0).is_err());
        assert!(QuantSpec::new(17, -1.0, 1.0).is_err());
        assert!(QuantSpec::new(4, 1.0, 1.0).is_err());
        assert!(QuantSpec::new(4, 1.0, -1.0).is_err());
    }

    #[test]
    fn matches_enumeration_on_sweep() {
        for bits in 1..=6 {
            let s = spec(bits, -0.75, 1.25);
            for i in 0..=4000 {
                let x = -1.5 + 3.5 * i as f64 / 4000.0;
                let q = s.quantize(x);
                assert!((q - nearest_by_enumeration(x, &s)).abs() < 1e-12, "bits={bits} x={x}");
            }
        }
    }

    #[test]
    fn ste_is_clipped_identity() {
        let s = spec(4, -1.0, 1.0);
        assert_eq!(ste_backward(0.37, 0.3, &s), 0.37);
        assert_eq!(ste_backward(0.37, 1.0, &s), 0.37);
        assert_eq!(ste_backward(0.37, 1.5, &s), 0.0);
        assert_eq!(ste_backward(0.37, -1.01, &s), 0.0);
    }

    #[test]
    fn noise_step_differs_from_grid_step() {
        let s = spec(2, -1.0, 1.0);
        assert!((s.step() - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.noise_step() - 0.5).abs() < 1e-15);
        assert!((s.noise_rms() - 0.1443375672974064).abs() < 1e-12);
    }

    #[test]
    fn lut_sizes_and_ranges() {
        let s4 = spec(4, -1.0, 1.0);
        let tanh = build_lut(Activation::Tanh, s4, s4);
        assert_eq!(tanh.entries().len(), 16);
        for bits in 1..=8 {
            let lut = build_lut(Activation::Sigmoid, spec(bits, -6.0, 6.0), spec(bits, 0.0, 1.0));
            assert!(lut.entries().iter().all(|&e| (0.0..=1.0).contains(&e)));
            assert!(lut.entries().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn tanh_lut_antisymmetric_by_enumeration() {
        for bits in 1..=8 {
            let s = spec(bits, -2.0, 2.0);
            let out = spec(bits, -1.0, 1.0);
            let lut = build_lut(Activation::Tanh, s, out);
            let n = lut.entries().len();
            for k in 0..n {
                let x = s.value(k as u32);
                let direct = nearest_by_enumeration(x.tanh(), &out);
                assert!((lut.lookup(k as u32) - direct).abs() < 1e-12);
                let mirrored = lut.lookup((n - 1 - k) as u32);
                let diff = (lut.lookup(k as u32) + mirrored).abs();
                // Only a tie at the output grid may break exact antisymmetry.
                assert!(diff < 1e-12 || (diff - out.step()).abs() < 1e-9, "bits={bits} k={k}");
            }
        }
    }

    #[test]
    fn named_lut_rejects_unknown_function() {
        let s = spec(4, -1.0, 1.0);
        assert!(matches!(build_lut_named("relu", s, s), Err(Error::UnsupportedActivation(_))));
        assert!(build_lut_named("tanh", s, s).is_ok());
    }
}
