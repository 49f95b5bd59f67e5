//! Finite-difference gradient oracles for a small LSTM cell, full precision
//! and through the quantized crossbar with straight-through gradients.

use nvm_lstm::crossbar::{forward_sequence, program, CrossbarConfig, NoiseConfig};
use nvm_lstm::lstm::{forward_sequence_ref, lstm_backward, LstmParams, LstmState};
use nvm_lstm::seed::stream_rng;
use nvm_lstm::{Matrix, QuantSpec};
use rand::Rng;

pub const M: usize = 3;
pub const N: usize = 3;
pub const T: usize = 4;

/// One analytic gradient entry next to its finite-difference estimate.
pub struct Pair {
    pub label: String,
    pub analytic: f64,
    pub numeric: f64,
}

impl Pair {
    pub fn close(&self, rel: f64, floor: f64) -> bool {
        (self.analytic - self.numeric).abs() <= rel * self.analytic.abs().max(self.numeric.abs()) + floor
    }
}

/// Largest `|a - n| / max(|a|, |n|)` over pairs whose magnitude exceeds `floor`.
pub fn worst_relative(pairs: &[Pair], floor: f64) -> f64 {
    pairs
        .iter()
        .filter(|p| p.analytic.abs().max(p.numeric.abs()) > floor)
        .map(|p| (p.analytic - p.numeric).abs() / p.analytic.abs().max(p.numeric.abs()))
        .fold(0.0, f64::max)
}

pub struct Problem {
    pub w: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    /// Loss is `Σ_t a_t · h_t`, so the upstream gradient at `h_t` is `a_t`.
    pub a: Vec<Vec<f64>>,
}

pub fn problem(seed: u64, w_scale: f64, x_scale: f64) -> Problem {
    let mut rng = stream_rng(seed, "gradient-check");
    let mut draw = |s: f64| rng.random_range(-s..=s);
    Problem {
        w: (0..(M + N) * 4 * N).map(|_| draw(w_scale)).collect(),
        xs: (0..T).map(|_| (0..M).map(|_| draw(x_scale)).collect()).collect(),
        a: (0..T).map(|_| (0..N).map(|_| draw(1.0)).collect()).collect(),
    }
}

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn act(j: usize, z: f64) -> f64 {
    if j < 3 * N {
        sig(z)
    } else {
        z.tanh()
    }
}

/// Scalar-loop cell, weights indexed `w[r * 4N + j]` with columns `[f|i|o|c]`.
fn fp_loss(w: &[f64], xs: &[Vec<f64>], a: &[Vec<f64>]) -> f64 {
    let (mut h, mut c) = (vec![0.0; N], vec![0.0; N]);
    let mut loss = 0.0;
    for t in 0..T {
        let v: Vec<f64> = xs[t].iter().chain(&h).copied().collect();
        let g: Vec<f64> = (0..4 * N).map(|j| act(j, (0..M + N).map(|r| v[r] * w[r * 4 * N + j]).sum())).collect();
        for k in 0..N {
            c[k] = g[k] * c[k] + g[N + k] * g[3 * N + k];
            h[k] = g[2 * N + k] * c[k].tanh();
        }
        loss += (0..N).map(|k| a[t][k] * h[k]).sum::<f64>();
    }
    loss
}

/// BPTT gradients of the floating-point cell against central differences,
/// for every weight and every input element.
pub fn fp_pairs(seed: u64) -> Vec<Pair> {
    let p = problem(seed, 0.8, 1.0);
    let params = LstmParams::from_concatenated(M, N, Matrix::from_vec(M + N, 4 * N, p.w.clone()).unwrap()).unwrap();
    let cache = forward_sequence_ref(&params, &p.xs, &LstmState::zeros(N)).unwrap();
    let grads = lstm_backward(&params, &cache, &p.a).unwrap();
    let eps = 1e-5;
    let mut out = Vec::new();
    for idx in 0..p.w.len() {
        let mut plus = p.w.clone();
        let mut minus = p.w.clone();
        plus[idx] += eps;
        minus[idx] -= eps;
        let fd = (fp_loss(&plus, &p.xs, &p.a) - fp_loss(&minus, &p.xs, &p.a)) / (2.0 * eps);
        out.push(Pair { label: format!("seed {seed} weight {idx}"), analytic: grads.weights.as_slice()[idx], numeric: fd });
    }
    for t in 0..T {
        for k in 0..M {
            let mut plus = p.xs.clone();
            let mut minus = p.xs.clone();
            plus[t][k] += eps;
            minus[t][k] -= eps;
            let fd = (fp_loss(&p.w, &plus, &p.a) - fp_loss(&p.w, &minus, &p.a)) / (2.0 * eps);
            out.push(Pair { label: format!("seed {seed} input ({t},{k})"), analytic: grads.inputs[t][k], numeric: fd });
        }
    }
    out
}

/// Offsets `q(x) - clip(x)` of every quantizer at the base point.
#[derive(Default)]
struct Offsets {
    w: Vec<f64>,
    x: Vec<Vec<f64>>,
    /// DAC on the recurrent input; nonzero only for the zero initial state.
    h_in: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    gate: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

struct Grids {
    weight: QuantSpec<f64>,
    signal: QuantSpec<f64>,
    adc: [QuantSpec<f64>; 4],
    out: [QuantSpec<f64>; 4],
}

/// The quantized cell written with explicit loops. With `replay = None` every
/// quantizer is applied and its offset recorded; with `Some`, each quantizer
/// becomes `clip(x) + offset`, the surrogate whose derivative is the clipped
/// straight-through gradient.
fn quantized_loss(w: &[f64], xs: &[Vec<f64>], a: &[Vec<f64>], grids: &Grids, replay: Option<&Offsets>) -> (f64, Offsets) {
    let mut rec = Offsets::default();
    let q = |spec: &QuantSpec<f64>, v: f64, slot: Option<f64>, out: &mut Vec<f64>| -> f64 {
        let clipped = v.max(spec.v_min()).min(spec.v_max());
        match slot {
            Some(d) => clipped + d,
            None => {
                let qv = spec.quantize(v);
                out.push(qv - clipped);
                qv
            }
        }
    };
    let mut w_rec = Vec::new();
    let wq: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(i, &v)| q(&grids.weight, v, replay.map(|o| o.w[i]), &mut w_rec))
        .collect();
    rec.w = w_rec;

    let (mut h, mut c) = (vec![0.0; N], vec![0.0; N]);
    let mut loss = 0.0;
    for t in 0..T {
        let mut x_rec = Vec::new();
        let xq: Vec<f64> =
            (0..M).map(|k| q(&grids.signal, xs[t][k], replay.map(|o| o.x[t][k]), &mut x_rec)).collect();
        // `h` is already on the DAC grid after the first step, so converting it
        // again is the identity; only the offset is replayed, without a clip.
        let mut h_in_rec = Vec::new();
        let hq: Vec<f64> = (0..N)
            .map(|k| match replay {
                Some(o) => h[k] + o.h_in[t][k],
                None => {
                    let qv = grids.signal.quantize(h[k]);
                    h_in_rec.push(qv - h[k]);
                    qv
                }
            })
            .collect();
        let v: Vec<f64> = xq.iter().chain(&hq).copied().collect();
        let mut z_rec = Vec::new();
        let mut g_rec = Vec::new();
        let mut g = [0.0; 4 * N];
        for j in 0..4 * N {
            let b = j / N;
            let z: f64 = (0..M + N).map(|r| v[r] * wq[r * 4 * N + j]).sum();
            let zq = q(&grids.adc[b], z, replay.map(|o| o.z[t][j]), &mut z_rec);
            let exact = act(j, zq);
            g[j] = match replay {
                Some(o) => exact + o.gate[t][j],
                None => {
                    let lut = grids.out[b].quantize(exact);
                    g_rec.push(lut - exact);
                    lut
                }
            };
        }
        let mut h_rec = Vec::new();
        for k in 0..N {
            c[k] = g[k] * c[k] + g[N + k] * g[3 * N + k];
            let raw = g[2 * N + k] * c[k].tanh();
            h[k] = q(&grids.signal, raw, replay.map(|o| o.h[t][k]), &mut h_rec);
        }
        loss += (0..N).map(|k| a[t][k] * h[k]).sum::<f64>();
        rec.x.push(x_rec);
        rec.h_in.push(h_in_rec);
        rec.z.push(z_rec);
        rec.gate.push(g_rec);
        rec.h.push(h_rec);
    }
    (loss, rec)
}

pub struct SteCase {
    pub pairs: Vec<Pair>,
    /// Latent weights beyond `w_max` and inputs beyond the DAC range.
    pub clipped_weights: usize,
    pub clipped_inputs: usize,
}

/// STE gradients through the crossbar against central differences of the
/// clipped surrogate. Panics if the oracle forward disagrees with the
/// crossbar or a clipped entry receives a gradient.
pub fn ste_case(seed: u64, bits: u32, w_max: f64, adc_range: f64, w_scale: f64, x_scale: f64) -> SteCase {
    let p = problem(seed, w_scale, x_scale);
    let cfg = CrossbarConfig::<f64>::lstm(M, N, bits, bits, bits, w_max)
        .unwrap()
        .with_adc_ranges(vec![adc_range; 4])
        .unwrap();
    let luts = cfg.gate_luts().unwrap();
    let grids = Grids {
        weight: cfg.weight_spec,
        signal: cfg.signal_spec(),
        adc: std::array::from_fn(|b| cfg.adc_spec(b).unwrap()),
        out: std::array::from_fn(|b| *luts[b].out_spec()),
    };
    let latent = Matrix::from_vec(M + N, 4 * N, p.w.clone()).unwrap();
    let params = LstmParams::from_concatenated(M, N, latent.clone()).unwrap();
    let arr = program(&latent, &cfg).unwrap();
    let cache = forward_sequence(&arr, &cfg, &NoiseConfig::default(), None, &p.xs, &LstmState::zeros(N)).unwrap();
    let grads = lstm_backward(&params, &cache, &p.a).unwrap();

    let (base, offsets) = quantized_loss(&p.w, &p.xs, &p.a, &grids, None);
    let crate_loss: f64 = cache.steps().iter().zip(&p.a).map(|(s, a)| s.h().iter().zip(a).map(|(h, a)| h * a).sum::<f64>()).sum();
    assert!((base - crate_loss).abs() < 1e-12, "bits {bits}: oracle forward {base} vs crossbar {crate_loss}");
    let (replayed, _) = quantized_loss(&p.w, &p.xs, &p.a, &grids, Some(&offsets));
    assert!((base - replayed).abs() < 1e-12);

    let eps = 1e-6;
    let surrogate = |w: &[f64], xs: &[Vec<f64>]| quantized_loss(w, xs, &p.a, &grids, Some(&offsets)).0;
    let mut case = SteCase { pairs: Vec::new(), clipped_weights: 0, clipped_inputs: 0 };
    for idx in 0..p.w.len() {
        let mut plus = p.w.clone();
        let mut minus = p.w.clone();
        plus[idx] += eps;
        minus[idx] -= eps;
        let fd = (surrogate(&plus, &p.xs) - surrogate(&minus, &p.xs)) / (2.0 * eps);
        let g = grads.weights.as_slice()[idx];
        if p.w[idx].abs() > w_max {
            case.clipped_weights += 1;
            assert_eq!(g, 0.0, "clipped latent weight {idx} must get no gradient");
        }
        case.pairs.push(Pair { label: format!("seed {seed} bits {bits} weight {idx}"), analytic: g, numeric: fd });
    }
    for t in 0..T {
        for k in 0..M {
            let mut plus = p.xs.clone();
            let mut minus = p.xs.clone();
            plus[t][k] += eps;
            minus[t][k] -= eps;
            let fd = (surrogate(&p.w, &plus) - surrogate(&p.w, &minus)) / (2.0 * eps);
            let g = grads.inputs[t][k];
            if p.xs[t][k].abs() > 1.0 {
                case.clipped_inputs += 1;
                assert_eq!(g, 0.0);
            }
            case.pairs.push(Pair { label: format!("seed {seed} bits {bits} input ({t},{k})"), analytic: g, numeric: fd });
        }
    }
    case
}
