//! Crossbar reads against scalar-loop oracles, plus noise statistics.

mod support;

use nvm_lstm::crossbar::{program, vmm, CrossbarConfig, NoiseConfig};
use nvm_lstm::seed::stream_rng;
use nvm_lstm::Matrix;
use rand::Rng as _;
use support::crossbar_oracle::{array_cfg, check_noiseless_reads, twelve_bit_deviation};

#[test]
fn noiseless_read_matches_scalar_loop_oracle() {
    let columns = check_noiseless_reads(11, 100).unwrap_or_else(|e| panic!("{e}"));
    assert!(columns > 100);
}

#[test]
fn single_cell_obeys_ohms_law() {
    let cfg = array_cfg(1, 1, 4, 1, 8, None);
    for (w, code, volts) in [(1.0, 1, 0.2), (1.0, 0, -0.2), (-1.0, 1, 0.2)] {
        let arr = program(&Matrix::from_vec(1, 1, vec![w]).unwrap(), &cfg).unwrap();
        let out = vmm(&arr, &[code], &cfg, &NoiseConfig::default(), None).unwrap();
        let g = w.signum() * (cfg.g_max - cfg.g_min);
        assert_eq!(arr.g_eff().get(0, 0), g);
        let expected = volts * g;
        assert!((out.currents[0] - expected).abs() <= 1e-18, "{} vs {expected}", out.currents[0]);
    }
}

#[test]
fn column_currents_superpose_over_rows() {
    let cfg = array_cfg(16, 8, 4, 3, 8, None);
    let half = array_cfg(8, 8, 4, 3, 8, None);
    let mut rng = stream_rng(3, "superposition");
    for _ in 0..20 {
        let w = Matrix::from_fn(16, 8, |_, _| rng.random_range(-1.0..1.0));
        let top = Matrix::from_fn(8, 8, |r, c| w.get(r, c));
        let bottom = Matrix::from_fn(8, 8, |r, c| w.get(r + 8, c));
        let codes: Vec<u32> = (0..16).map(|_| rng.random_range(0..8)).collect();
        let read = |m: &Matrix<f64>, cfg: &CrossbarConfig<f64>, codes: &[u32]| {
            vmm(&program(m, cfg).unwrap(), codes, cfg, &NoiseConfig::default(), None).unwrap().currents
        };
        let full = read(&w, &cfg, &codes);
        let (it, ib) = (read(&top, &half, &codes[..8]), read(&bottom, &half, &codes[8..]));
        for j in 0..8 {
            assert!((full[j] - it[j] - ib[j]).abs() <= 1e-18, "column {j}");
        }
        // Mirrored DAC codes drive opposite voltages.
        let mirrored: Vec<u32> = codes.iter().map(|&k| 7 - k).collect();
        let neg = read(&w, &cfg, &mirrored);
        for j in 0..8 {
            assert!((neg[j] + full[j]).abs() <= 1e-18);
        }
    }
}

fn sample_std(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn weight_noise_has_the_requested_spread() {
    let cfg = array_cfg(64, 64, 4, 4, 8, None);
    let latent = Matrix::from_fn(64, 64, |r, c| ((r * 7 + c * 3) % 11) as f64 / 11.0 - 0.5);
    let arr = program(&latent, &cfg).unwrap();
    let clean = arr.read_back(&cfg);
    let noise = NoiseConfig { weight_noise_beta: 0.1, ..Default::default() };
    let mut rng = stream_rng(5, "weight-noise");
    let mut deltas = Vec::new();
    while deltas.len() < 100_000 {
        let out = vmm(&arr, &[7; 64], &cfg, &noise, Some(&mut rng)).unwrap();
        let realized = out.realized_weights.expect("fresh draw per read");
        deltas.extend(realized.as_slice().iter().zip(clean.as_slice()).map(|(a, b)| a - b));
    }
    let expected = 0.1 * 2.0;
    let got = sample_std(&deltas);
    assert!((got / expected - 1.0).abs() < 0.02, "std {got}, expected {expected}");
}

#[test]
fn adc_noise_has_the_quantization_spread() {
    let bits = 4;
    let range = 3.0;
    let cfg = array_cfg(32, 128, 4, 4, bits, Some(range));
    let latent = Matrix::from_fn(32, 128, |r, c| ((r * 5 + c) % 9) as f64 / 9.0 - 0.5);
    let arr = program(&latent, &cfg).unwrap();
    let codes = vec![11; 32];
    let clean = vmm(&arr, &codes, &cfg, &NoiseConfig::default(), None).unwrap().pre_adc;
    let noise = NoiseConfig { adc_noise_enabled: true, ..Default::default() };
    let mut rng = stream_rng(6, "adc-noise");
    let mut deltas = Vec::new();
    while deltas.len() < 100_000 {
        let out = vmm(&arr, &codes, &cfg, &noise, Some(&mut rng)).unwrap();
        deltas.extend(out.pre_adc.iter().zip(&clean).map(|(a, b)| a - b));
    }
    let expected = 2.0 * range / (16.0 * 12f64.sqrt());
    let got = sample_std(&deltas);
    assert!((got / expected - 1.0).abs() < 0.02, "std {got}, expected {expected}");
}

#[test]
fn noisy_reads_are_reproducible_from_the_seed() {
    let cfg = array_cfg(16, 32, 4, 4, 4, Some(2.0));
    let latent = Matrix::from_fn(16, 32, |r, c| ((r + 2 * c) % 5) as f64 / 5.0 - 0.4);
    let arr = program(&latent, &cfg).unwrap();
    let noise = NoiseConfig { adc_noise_enabled: true, weight_noise_beta: 0.05, ..Default::default() };
    let read = |seed| {
        let mut rng = stream_rng(seed, "noise");
        (0..3).map(|_| vmm(&arr, &[3; 16], &cfg, &noise, Some(&mut rng)).unwrap().pre_activation).collect::<Vec<_>>()
    };
    assert_eq!(read(1), read(1));
    assert_ne!(read(1), read(2));
}

#[test]
fn twelve_bit_step_tracks_the_reference_cell() {
    let worst = twelve_bit_deviation(8);
    assert!(worst.pre_activation_steps <= 2.0, "pre-activation off by {} ADC steps", worst.pre_activation_steps);
    assert!(worst.gate_steps <= 2.0, "gate off by {} ADC steps", worst.gate_steps);
    assert!(worst.pre_activation_steps > 0.0);
}
