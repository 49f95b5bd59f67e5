//! Scalar-loop oracles for crossbar reads and the quantized LSTM step.

use nvm_lstm::crossbar::{forward_sequence, program, quantized_lstm_step, vmm, CrossbarConfig, NoiseConfig};
use nvm_lstm::lstm::{lstm_step_ref, LstmParams, LstmState};
use nvm_lstm::seed::{stream_rng, Rng};
use nvm_lstm::{Matrix, QuantSpec};
use rand::Rng as _;

pub fn array_cfg(rows: usize, cols: usize, w_bits: u32, dac_bits: u32, adc_bits: u32, adc_range: Option<f64>) -> CrossbarConfig<f64> {
    CrossbarConfig {
        rows,
        cols,
        g_min: 1e-7,
        g_max: 1e-5,
        v_read: 0.2,
        weight_spec: QuantSpec::symmetric(w_bits, 1.0).unwrap(),
        dac_spec: QuantSpec::symmetric(dac_bits, 0.2).unwrap(),
        adc_bits,
        adc_ranges: adc_range.map(|r| vec![r]),
        num_adcs: 1,
        t_col: 1e-9,
    }
}

/// Nearest grid level by enumeration, ties to the larger level.
pub fn nearest_level(x: f64, lo: f64, hi: f64, bits: u32) -> f64 {
    let n = 1usize << bits;
    let mut best = f64::NAN;
    let mut best_d = f64::INFINITY;
    for k in 0..n {
        let level = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let d = (x - level).abs();
        if d <= best_d {
            best = level;
            best_d = d;
        }
    }
    best
}

struct Instance {
    cfg: CrossbarConfig<f64>,
    latent: Matrix<f64>,
    codes: Vec<u32>,
}

fn random_instance(rng: &mut Rng) -> Instance {
    let rows = rng.random_range(1..=64);
    let cols = rng.random_range(1..=256);
    let w_bits = rng.random_range(1..=8);
    let dac_bits = rng.random_range(1..=8);
    let adc_bits = rng.random_range(1..=12);
    let adc_range = rng.random_range(0.5..8.0);
    let cfg = array_cfg(rows, cols, w_bits, dac_bits, adc_bits, Some(adc_range));
    let latent = Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.2..1.2));
    let codes = (0..rows).map(|_| rng.random_range(0..1u32 << dac_bits)).collect();
    Instance { cfg, latent, codes }
}

/// Checks `instances` random noiseless reads column by column; returns the
/// number of columns compared or the first mismatch.
pub fn check_noiseless_reads(seed: u64, instances: usize) -> Result<usize, String> {
    let mut rng = stream_rng(seed, "crossbar-oracle");
    let mut columns = 0;
    for case in 0..instances {
        let Instance { cfg, latent, codes } = random_instance(&mut rng);
        let arr = program(&latent, &cfg).unwrap();
        let out = vmm(&arr, &codes, &cfg, &NoiseConfig::default(), None).unwrap();

        // DAC levels and weight levels come from the quantizer (covered by its
        // own property tests); the array arithmetic is redone here.
        let g_per_w = (cfg.g_max - cfg.g_min) / 1.0;
        let to_pre = 1.0 / (cfg.v_read * (cfg.g_max - cfg.g_min));
        let volts: Vec<f64> = codes.iter().map(|&k| cfg.dac_spec.value(k)).collect();
        let r = cfg.adc_ranges.as_ref().unwrap()[0];
        for j in 0..cfg.cols {
            let mut current = 0.0;
            for i in 0..cfg.rows {
                let w_q = cfg.weight_spec.quantize(latent.get(i, j));
                let level = nearest_level(latent.get(i, j).clamp(-1.0, 1.0), -1.0, 1.0, cfg.weight_spec.bits());
                if (w_q - level).abs() >= 1e-12 {
                    return Err(format!("case {case} cell ({i},{j}): weight level {w_q} vs {level}"));
                }
                current += volts[i] * (w_q * g_per_w);
            }
            let z = current * to_pre;
            if out.currents[j] != current {
                return Err(format!("case {case} column {j}: current {} vs {current}", out.currents[j]));
            }
            if out.pre_adc[j] != z {
                return Err(format!("case {case} column {j}: pre-activation {} vs {z}", out.pre_adc[j]));
            }
            let expected = nearest_level(z.clamp(-r, r), -r, r, cfg.adc_bits);
            let got = out.pre_activation[j];
            // A level pair equidistant from `z` to rounding error is a tie either way.
            let tie = ((got - z).abs() - (expected - z).abs()).abs() <= 1e-12 * r;
            if !((got - expected).abs() <= 1e-12 * r || tie) {
                return Err(format!("case {case} column {j}: ADC {got} vs {expected}"));
            }
            columns += 1;
        }
    }
    Ok(columns)
}

/// Worst deviation, in ADC steps, of 12-bit crossbar pre-activations and
/// gates from the floating-point cell over an 8-step sequence.
pub struct TwelveBit {
    pub pre_activation_steps: f64,
    pub gate_steps: f64,
}

pub fn twelve_bit_deviation(seed: u64) -> TwelveBit {
    let (m, n) = (12, 10);
    let mut rng = stream_rng(seed, "twelve-bit");
    let params = LstmParams::<f64>::random(m, n, 0.6, &mut rng);
    let range = 12.0;
    let cfg = CrossbarConfig::lstm(m, n, 12, 12, 12, 1.0).unwrap().with_adc_ranges(vec![range; 4]).unwrap();
    let adc_step = 2.0 * range / 4095.0;
    let arr = program(params.weights(), &cfg).unwrap();
    let mut state = LstmState::zeros(n);
    let mut worst = TwelveBit { pre_activation_steps: 0.0, gate_steps: 0.0 };
    for _ in 0..8 {
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-0.9..0.9)).collect();
        let cache = forward_sequence(&arr, &cfg, &NoiseConfig::default(), None, std::slice::from_ref(&x), &state).unwrap();
        let step = &cache.steps()[0];
        let (next, gates) = quantized_lstm_step(&arr, &x, &state, &cfg, &NoiseConfig::default(), None).unwrap();
        assert_eq!(next.h, step.h(), "single step and sequence paths disagree");
        // Same input state on both paths so only the step itself is compared.
        let (_, ref_gates) = lstm_step_ref(&params, &x, &state).unwrap();
        let v: Vec<f64> = x.iter().chain(&state.h).copied().collect();
        let z_ref = params.weights().vec_mul(&v);
        for (&zq, &zr) in step.activation_inputs().iter().zip(&z_ref) {
            worst.pre_activation_steps = worst.pre_activation_steps.max((zq - zr).abs() / adc_step);
        }
        for (q, r) in [(&gates.f, &ref_gates.f), (&gates.i, &ref_gates.i), (&gates.o, &ref_gates.o), (&gates.c_tilde, &ref_gates.c_tilde)] {
            for k in 0..n {
                worst.gate_steps = worst.gate_steps.max((q[k] - r[k]).abs() / adc_step);
            }
        }
        state = next;
    }
    worst
}
