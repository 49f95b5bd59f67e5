//! Behavioral simulator for LSTM inference on non-volatile-memory crossbar
//! arrays: uniform quantizers, a reference LSTM cell with BPTT, a crossbar
//! model with DAC/ADC and device noise, quantization-aware training, desk-scale
//! tasks, and an analytic throughput/power/area model.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision for the common types.

pub mod cost;
pub mod crossbar;
pub mod error;
pub mod experiment;
pub mod lstm;
pub mod matrix;
pub mod model;
pub mod quantizer;
pub mod scalar;
pub mod seed;
pub mod tasks;
pub mod trainer;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use quantizer::{build_lut, quantize, ste_backward, Activation, ActivationLut, QuantSpec};
pub use scalar::Scalar;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type QuantSpec32 = QuantSpec<f32>;
pub type QuantSpec64 = QuantSpec<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Matrix64 = Matrix<f64>;
pub type LstmParams32 = lstm::LstmParams<f32>;
pub type LstmParams64 = lstm::LstmParams<f64>;
pub type CrossbarConfig32 = crossbar::CrossbarConfig<f32>;
pub type CrossbarConfig64 = crossbar::CrossbarConfig<f64>;
pub type Model32 = model::Model<f32>;
pub type Model64 = model::Model<f64>;
pub type TrainedModel32 = trainer::TrainedModel<f32>;
pub type TrainedModel64 = trainer::TrainedModel<f64>;
