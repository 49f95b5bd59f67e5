use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::seed::Rng;

use super::array::ProgrammedArray;
use super::config::{CrossbarConfig, NoiseConfig};

/// Result of one analog read of the array.
#[derive(Clone, Debug)]
pub struct VmmOutput<S> {
    /// Column currents in amps, `I_j = Σ_i V_i G_ij`.
    pub currents: Vec<S>,
    /// Currents in pre-activation units, including ADC noise when enabled.
    pub pre_adc: Vec<S>,
    /// ADC output codes; `None` when the ADC is bypassed.
    pub adc_codes: Option<Vec<u32>>,
    /// Dequantized ADC output (equal to `pre_adc` when bypassed).
    pub pre_activation: Vec<S>,
    /// Weights realized by this read when fresh weight noise was drawn.
    pub realized_weights: Option<Matrix<S>>,
    /// Time for the multiplexed ADCs to convert every column.
    pub conversion_time: S,
}

/// Drives the rows with DAC codes and digitizes the column currents.
///
/// Weight noise is drawn per cell in weight units before the conductance map
/// when `noise.resample_per_read` is set; otherwise the array is read as is
/// (see [`ProgrammedArray::perturbed`]). ADC noise is added to each column in
/// pre-activation units before conversion.
pub fn vmm<S: Scalar>(
    arr: &ProgrammedArray<S>,
    x_codes: &[u32],
    cfg: &CrossbarConfig<S>,
    noise: &NoiseConfig,
    mut rng: Option<&mut Rng>,
) -> Result<VmmOutput<S>> {
    let (rows, cols) = arr.shape();
    if x_codes.len() != rows {
        return Err(Error::dim("DAC input codes", rows, x_codes.len()));
    }
    if let Some(&bad) = x_codes.iter().find(|&&k| k >= cfg.dac_spec.levels()) {
        return Err(Error::CodeOutOfRange { code: bad, bits: cfg.dac_spec.bits() });
    }
    let weight_noise = noise.weight_noise_enabled() && noise.resample_per_read;
    let adc_noise = noise.adc_noise_enabled && cfg.adc_ranges.is_some();
    if (weight_noise || adc_noise) && rng.is_none() {
        return Err(Error::MissingRng);
    }

    let volts: Vec<S> = x_codes.iter().map(|&k| cfg.dac_spec.value(k)).collect();
    let mut currents = vec![S::zero(); cols];
    let realized_weights = if weight_noise {
        let rng = rng.as_deref_mut().expect("checked above");
        let sigma = noise.weight_sigma(&cfg.weight_spec);
        let per_weight = cfg.conductance_per_weight();
        let mut realized = arr.weights().clone();
        for r in 0..rows {
            let v = volts[r];
            for (w, i) in realized.row_mut(r).iter_mut().zip(currents.iter_mut()) {
                *w += sigma * S::standard_normal(rng);
                *i += v * (*w * per_weight);
            }
        }
        Some(realized)
    } else {
        arr.g_eff().vec_mul_into(&volts, &mut currents);
        None
    };

    let to_pre = cfg.current_to_preactivation();
    let mut pre_adc: Vec<S> = currents.iter().map(|&i| i * to_pre).collect();
    let group_width = cols / cfg.adc_groups();
    let (adc_codes, pre_activation) = match &cfg.adc_ranges {
        Some(_) => {
            let specs: Vec<_> = (0..cfg.adc_groups()).map(|g| cfg.adc_spec(g).expect("group exists")).collect();
            if adc_noise {
                let rng = rng.expect("checked above");
                for (j, z) in pre_adc.iter_mut().enumerate() {
                    *z += specs[j / group_width].noise_rms() * S::standard_normal(rng);
                }
            }
            let codes: Vec<u32> = pre_adc.iter().enumerate().map(|(j, &z)| specs[j / group_width].code(z)).collect();
            let deq = codes.iter().enumerate().map(|(j, &k)| specs[j / group_width].value(k)).collect();
            (Some(codes), deq)
        }
        None => (None, pre_adc.clone()),
    };

    Ok(VmmOutput {
        currents,
        pre_adc,
        adc_codes,
        pre_activation,
        realized_weights,
        conversion_time: cfg.conversion_time(),
    })
}
