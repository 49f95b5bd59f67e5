//! Behavioral model of the NVM weight array: DACs, Ohm's-law column currents,
//! multiplexed ADCs, activation lookup tables and injected noise.

mod array;
mod config;
mod step;
mod vmm;

pub use array::{program, ArrayHeader, ProgrammedArray};
pub use config::{adc_noise_sigma, CrossbarConfig, NoiseConfig, MAX_WEIGHT_NOISE_BETA};
pub use step::{forward_sequence, quantized_lstm_step};
pub(crate) use step::{forward_sequence_with, luts_for};
pub use vmm::{vmm, VmmOutput};
