use crate::error::{Error, Result};
use crate::lstm::{concat, finish_step, GateActivations, LstmState, SequenceCache, StepCache};
use crate::quantizer::{ActivationLut, QuantSpec};
use crate::scalar::Scalar;
use crate::seed::Rng;

use super::array::ProgrammedArray;
use super::config::{CrossbarConfig, NoiseConfig};
use super::vmm::vmm;

fn lstm_dims<S: Scalar>(cfg: &CrossbarConfig<S>) -> Result<(usize, usize)> {
    if !cfg.cols.is_multiple_of(4) || cfg.rows <= cfg.cols / 4 {
        return Err(Error::Config(format!("{}x{} array cannot hold an LSTM cell", cfg.rows, cfg.cols)));
    }
    let n = cfg.cols / 4;
    Ok((cfg.rows - n, n))
}

pub(crate) fn luts_for<S: Scalar>(cfg: &CrossbarConfig<S>) -> Result<Option<[ActivationLut<S>; 4]>> {
    match &cfg.adc_ranges {
        None => Ok(None),
        Some(_) => cfg
            .gate_luts()
            .map(Some)
            .ok_or_else(|| Error::Config("LSTM arrays need one ADC range per gate block".into())),
    }
}

#[allow(clippy::too_many_arguments)]
fn step<S: Scalar>(
    arr: &ProgrammedArray<S>,
    cfg: &CrossbarConfig<S>,
    luts: Option<&[ActivationLut<S>; 4]>,
    signal: &QuantSpec<S>,
    noise: &NoiseConfig,
    rng: Option<&mut Rng>,
    x: &[S],
    state: &LstmState<S>,
) -> Result<StepCache<S>> {
    let (m, n) = lstm_dims(cfg)?;
    if x.len() != m {
        return Err(Error::dim("input vector", m, x.len()));
    }
    if state.h.len() != n || state.c.len() != n {
        return Err(Error::dim("state vectors", n, format!("h={}, c={}", state.h.len(), state.c.len())));
    }
    let x_codes: Vec<u32> = x.iter().map(|&v| signal.code(v)).collect();
    let h_codes: Vec<u32> = state.h.iter().map(|&v| signal.code(v)).collect();
    let x_pass = x.iter().map(|&v| signal.contains(v)).collect();
    let v = concat(
        &x_codes.iter().map(|&k| signal.value(k)).collect::<Vec<_>>(),
        &h_codes.iter().map(|&k| signal.value(k)).collect::<Vec<_>>(),
    );
    let codes = concat(&x_codes, &h_codes);

    let out = vmm(arr, &codes, cfg, noise, rng)?;
    let (adc_pass, gates) = match (luts, &out.adc_codes) {
        (Some(luts), Some(adc_codes)) => {
            let pass = out
                .pre_adc
                .iter()
                .enumerate()
                .map(|(j, &z)| luts[j / n].in_spec().contains(z))
                .collect::<Vec<bool>>();
            let gates = adc_codes.iter().enumerate().map(|(j, &k)| luts[j / n].lookup(k)).collect();
            (Some(pass), Some(gates))
        }
        _ => (None, None),
    };
    Ok(finish_step(
        v,
        Some(x_pass),
        out.realized_weights,
        out.pre_activation,
        adc_pass,
        &state.c,
        Some(signal),
        gates,
    ))
}

/// One LSTM step on the crossbar.
///
/// `[x, h]` is converted by the DACs, one read covers all `4n` columns
/// `[f | i | o | c_tilde]`, the ADC codes index the activation tables and the
/// cell update runs in full precision. The returned `h` is on the DAC grid;
/// `c` is not quantized.
pub fn quantized_lstm_step<S: Scalar>(
    arr: &ProgrammedArray<S>,
    x: &[S],
    state: &LstmState<S>,
    cfg: &CrossbarConfig<S>,
    noise: &NoiseConfig,
    rng: Option<&mut Rng>,
) -> Result<(LstmState<S>, GateActivations<S>)> {
    noise.validate()?;
    let (_, n) = lstm_dims(cfg)?;
    let luts = luts_for(cfg)?;
    let cache = step(arr, cfg, luts.as_ref(), &cfg.signal_spec(), noise, rng, x, state)?;
    Ok((cache.state(), cache.gates(n)))
}

/// Runs the crossbar cell over a sequence and records a cache for
/// [`crate::lstm::lstm_backward`].
pub fn forward_sequence<S: Scalar>(
    arr: &ProgrammedArray<S>,
    cfg: &CrossbarConfig<S>,
    noise: &NoiseConfig,
    rng: Option<&mut Rng>,
    xs: &[Vec<S>],
    init: &LstmState<S>,
) -> Result<SequenceCache<S>> {
    let luts = luts_for(cfg)?;
    forward_sequence_with(arr, cfg, luts.as_ref(), noise, rng, xs, init)
}

/// [`forward_sequence`] with the gate lookup tables supplied by the caller,
/// so repeated calls do not rebuild them.
pub(crate) fn forward_sequence_with<S: Scalar>(
    arr: &ProgrammedArray<S>,
    cfg: &CrossbarConfig<S>,
    luts: Option<&[ActivationLut<S>; 4]>,
    noise: &NoiseConfig,
    mut rng: Option<&mut Rng>,
    xs: &[Vec<S>],
    init: &LstmState<S>,
) -> Result<SequenceCache<S>> {
    noise.validate()?;
    let (m, n) = lstm_dims(cfg)?;
    if cfg.adc_ranges.is_some() != luts.is_some() {
        return Err(Error::Config("lookup tables must match the ADC configuration".into()));
    }
    let signal = cfg.signal_spec();

    let fixed;
    let arr = if noise.weight_noise_enabled() && !noise.resample_per_read {
        let rng = rng.as_deref_mut().ok_or(Error::MissingRng)?;
        fixed = arr.perturbed(cfg, noise.weight_sigma(&cfg.weight_spec), rng);
        &fixed
    } else {
        arr
    };

    let mut steps = Vec::with_capacity(xs.len());
    let mut state = init.clone();
    for x in xs {
        let s = step(arr, cfg, luts, &signal, noise, rng.as_deref_mut(), x, &state)?;
        state = s.state();
        steps.push(s);
    }
    Ok(SequenceCache {
        input_size: m,
        hidden_size: n,
        weights: arr.weights().clone(),
        weight_spec: Some(cfg.weight_spec),
        steps,
    })
}
