//! Converter and device noise magnitudes.

use super::units::{Amps, Hertz, Kelvin, Ohms, Volts};

pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// RMS quantization noise of an ideal `bits`-bit converter spanning `full_range`
/// volts: `full_range / (2^bits * sqrt(12))`.
pub fn quantization_noise_v(full_range: Volts, bits: u32) -> Volts {
    Volts(full_range.0 / (2f64.powi(bits as i32) * 12f64.sqrt()))
}

/// Effective number of bits for a signal-to-noise ratio in dB.
pub fn enob(snr_db: f64) -> f64 {
    (snr_db - 1.76) / 6.02
}

pub fn snr_db_for_enob(bits: f64) -> f64 {
    6.02 * bits + 1.76
}

/// Thermal noise voltage `sqrt(4 k_B T R BW)`.
pub fn johnson_noise(r: Ohms, t: Kelvin, bw: Hertz) -> Volts {
    Volts((4.0 * BOLTZMANN * t.0 * r.0 * bw.0).sqrt())
}

/// Shot noise current `sqrt(2 e I BW)`.
pub fn shot_noise(i: Amps, bw: Hertz) -> Amps {
    Amps((2.0 * ELEMENTARY_CHARGE * i.0 * bw.0).sqrt())
}
