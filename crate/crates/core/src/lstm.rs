//! Full-precision LSTM cell without biases, plus backpropagation through time
//! over a recorded forward pass.
//!
//! The four gate matrices are stored side by side in one `(m+n) x 4n` array in
//! the order `[W_f | W_i | W_o | W_c]`, which is also the column order of the
//! crossbar. Each gate reads the concatenated input `[x_t, h_{t-1}]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::quantizer::{Activation, QuantSpec};
use crate::scalar::{sigmoid, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    Forget,
    Input,
    Output,
    Candidate,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Forget, Gate::Input, Gate::Output, Gate::Candidate];

    /// Column block index inside the concatenated array.
    pub fn block(self) -> usize {
        self as usize
    }

    pub fn activation(self) -> Activation {
        match self {
            Gate::Candidate => Activation::Tanh,
            _ => Activation::Sigmoid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmParams<S> {
    input_size: usize,
    hidden_size: usize,
    weights: Matrix<S>,
}

impl<S: Scalar> LstmParams<S> {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self { input_size, hidden_size, weights: Matrix::zeros(input_size + hidden_size, 4 * hidden_size) }
    }

    /// Uniform initialization in `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(input_size: usize, hidden_size: usize, scale: f64, rng: &mut R) -> Self {
        let weights = Matrix::from_fn(input_size + hidden_size, 4 * hidden_size, |_, _| {
            S::lit(rng.random_range(-scale..=scale))
        });
        Self { input_size, hidden_size, weights }
    }

    pub fn from_gates(wf: &Matrix<S>, wi: &Matrix<S>, wo: &Matrix<S>, wc: &Matrix<S>) -> Result<Self> {
        let (rows, n) = wf.shape();
        for w in [wi, wo, wc] {
            if w.shape() != (rows, n) {
                return Err(Error::dim("gate matrices", format!("{rows}x{n}"), format!("{}x{}", w.rows(), w.cols())));
            }
        }
        if rows <= n {
            return Err(Error::dim("gate matrix rows (m+n)", format!("> {n}"), rows));
        }
        let weights = Matrix::hstack(&[wf, wi, wo, wc]).expect("equal row counts checked");
        Self::from_concatenated(rows - n, n, weights)
    }

    pub fn from_concatenated(input_size: usize, hidden_size: usize, weights: Matrix<S>) -> Result<Self> {
        let expected = (input_size + hidden_size, 4 * hidden_size);
        if weights.shape() != expected {
            return Err(Error::dim(
                "concatenated LSTM weights",
                format!("{}x{}", expected.0, expected.1),
                format!("{}x{}", weights.rows(), weights.cols()),
            ));
        }
        if !weights.is_finite() {
            return Err(Error::NonFinite("LSTM weights"));
        }
        Ok(Self { input_size, hidden_size, weights })
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn weights(&self) -> &Matrix<S> {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Matrix<S> {
        &mut self.weights
    }

    pub fn gate(&self, gate: Gate) -> Matrix<S> {
        self.weights.columns(gate.block() * self.hidden_size, self.hidden_size)
    }

    pub fn cast<T: Scalar>(&self) -> LstmParams<T> {
        LstmParams {
            input_size: self.input_size,
            hidden_size: self.hidden_size,
            weights: Matrix::from_fn(self.weights.rows(), self.weights.cols(), |r, c| T::lit(self.weights.get(r, c).as_f64())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmState<S> {
    pub h: Vec<S>,
    /// Memory cell; never quantized.
    pub c: Vec<S>,
}

impl<S: Scalar> LstmState<S> {
    pub fn zeros(hidden_size: usize) -> Self {
        Self { h: vec![S::zero(); hidden_size], c: vec![S::zero(); hidden_size] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateActivations<S> {
    pub f: Vec<S>,
    pub i: Vec<S>,
    pub o: Vec<S>,
    pub c_tilde: Vec<S>,
}

impl<S: Scalar> GateActivations<S> {
    pub(crate) fn from_blocks(a: &[S], n: usize) -> Self {
        Self {
            f: a[..n].to_vec(),
            i: a[n..2 * n].to_vec(),
            o: a[2 * n..3 * n].to_vec(),
            c_tilde: a[3 * n..].to_vec(),
        }
    }
}

/// Vector-level operation tally for one or more cell steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCount {
    pub vmm: usize,
    pub activations: usize,
    pub elementwise_mul: usize,
    pub elementwise_add: usize,
}

fn check_step_dims<S: Scalar>(params: &LstmParams<S>, x: &[S], state: &LstmState<S>) -> Result<()> {
    let n = params.hidden_size;
    if x.len() != params.input_size {
        return Err(Error::dim("input vector", params.input_size, x.len()));
    }
    if state.h.len() != n || state.c.len() != n {
        return Err(Error::dim("state vectors", n, format!("h={}, c={}", state.h.len(), state.c.len())));
    }
    Ok(())
}

pub(crate) fn concat<T: Copy>(x: &[T], h: &[T]) -> Vec<T> {
    let mut v = Vec::with_capacity(x.len() + h.len());
    v.extend_from_slice(x);
    v.extend_from_slice(h);
    v
}

/// One reference (floating-point) cell step.
pub fn lstm_step_ref<S: Scalar>(
    params: &LstmParams<S>,
    x: &[S],
    state: &LstmState<S>,
) -> Result<(LstmState<S>, GateActivations<S>)> {
    lstm_step_ref_counted(params, x, state, &mut OpCount::default())
}

/// [`lstm_step_ref`] that also records the vector operations it performs.
pub fn lstm_step_ref_counted<S: Scalar>(
    params: &LstmParams<S>,
    x: &[S],
    state: &LstmState<S>,
    ops: &mut OpCount,
) -> Result<(LstmState<S>, GateActivations<S>)> {
    check_step_dims(params, x, state)?;
    let n = params.hidden_size;
    let v = concat(x, &state.h);

    let mut pre = [vec![S::zero(); n], vec![S::zero(); n], vec![S::zero(); n], vec![S::zero(); n]];
    for gate in Gate::ALL {
        params.gate(gate).vec_mul_into(&v, &mut pre[gate.block()]);
        ops.vmm += 1;
    }
    let mut act = |g: Gate, z: &[S]| -> Vec<S> {
        ops.activations += 1;
        z.iter().map(|&z| g.activation().apply(z)).collect()
    };
    let gates = GateActivations {
        f: act(Gate::Forget, &pre[0]),
        i: act(Gate::Input, &pre[1]),
        o: act(Gate::Output, &pre[2]),
        c_tilde: act(Gate::Candidate, &pre[3]),
    };

    let fc: Vec<S> = gates.f.iter().zip(&state.c).map(|(&f, &c)| f * c).collect();
    let ig: Vec<S> = gates.i.iter().zip(&gates.c_tilde).map(|(&i, &g)| i * g).collect();
    ops.elementwise_mul += 2;
    let c: Vec<S> = fc.iter().zip(&ig).map(|(&a, &b)| a + b).collect();
    ops.elementwise_add += 1;
    let tanh_c: Vec<S> = c.iter().map(|v| v.tanh()).collect();
    ops.activations += 1;
    let h = gates.o.iter().zip(&tanh_c).map(|(&o, &t)| o * t).collect();
    ops.elementwise_mul += 1;

    Ok((LstmState { h, c }, gates))
}

/// Everything backpropagation needs from one forward step.
#[derive(Clone, Debug)]
pub struct StepCache<S> {
    /// Input vector actually applied to the weights, `[x, h_{t-1}]`.
    pub(crate) v: Vec<S>,
    /// Straight-through mask for the `x` part (DAC clipping); `None` passes all.
    pub(crate) x_pass: Option<Vec<bool>>,
    /// Weights realized for this read when they differ per step (read noise).
    pub(crate) step_weights: Option<Matrix<S>>,
    /// Values fed to the four activation units.
    pub(crate) act_in: Vec<S>,
    /// Straight-through mask of the ADC (in-range pre-activations).
    pub(crate) adc_pass: Option<Vec<bool>>,
    /// Activation outputs in block order `[f | i | o | c_tilde]`.
    pub(crate) gates: Vec<S>,
    pub(crate) c_prev: Vec<S>,
    pub(crate) c: Vec<S>,
    pub(crate) tanh_c: Vec<S>,
    /// Straight-through mask of the hidden-state quantizer.
    pub(crate) h_pass: Option<Vec<bool>>,
    pub(crate) h: Vec<S>,
}

impl<S: Scalar> StepCache<S> {
    pub fn h(&self) -> &[S] {
        &self.h
    }

    pub fn c(&self) -> &[S] {
        &self.c
    }

    pub fn gates(&self, n: usize) -> GateActivations<S> {
        GateActivations::from_blocks(&self.gates, n)
    }

    /// Pre-activation values seen by the activation units (ADC output when quantized).
    pub fn activation_inputs(&self) -> &[S] {
        &self.act_in
    }

    pub fn state(&self) -> LstmState<S> {
        LstmState { h: self.h.clone(), c: self.c.clone() }
    }
}

/// Recorded forward pass over one sequence.
#[derive(Clone, Debug)]
pub struct SequenceCache<S> {
    pub(crate) input_size: usize,
    pub(crate) hidden_size: usize,
    /// Weights used by every step without its own `step_weights`.
    pub(crate) weights: Matrix<S>,
    /// Weight grid for the straight-through mask on latent weights.
    pub(crate) weight_spec: Option<QuantSpec<S>>,
    pub(crate) steps: Vec<StepCache<S>>,
}

impl<S: Scalar> SequenceCache<S> {
    pub fn steps(&self) -> &[StepCache<S>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_state(&self) -> Option<LstmState<S>> {
        self.steps.last().map(StepCache::state)
    }
}

/// Runs the reference cell over `xs`, recording a cache for [`lstm_backward`].
pub fn forward_sequence_ref<S: Scalar>(
    params: &LstmParams<S>,
    xs: &[Vec<S>],
    init: &LstmState<S>,
) -> Result<SequenceCache<S>> {
    let n = params.hidden_size;
    let mut steps = Vec::with_capacity(xs.len());
    let mut state = init.clone();
    let mut z = vec![S::zero(); 4 * n];
    for x in xs {
        check_step_dims(params, x, &state)?;
        let v = concat(x, &state.h);
        params.weights.vec_mul_into(&v, &mut z);
        let step = finish_step(v, None, None, z.clone(), None, &state.c, None, None);
        state = step.state();
        steps.push(step);
    }
    Ok(SequenceCache {
        input_size: params.input_size,
        hidden_size: n,
        weights: params.weights.clone(),
        weight_spec: None,
        steps,
    })
}

/// Gate activations, cell update and hidden output shared by both backends.
///
/// `gates_override` carries lookup-table outputs on the crossbar path; without
/// it the exact activations of `act_in` are used. `h_spec` quantizes `h_t`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_step<S: Scalar>(
    v: Vec<S>,
    x_pass: Option<Vec<bool>>,
    step_weights: Option<Matrix<S>>,
    act_in: Vec<S>,
    adc_pass: Option<Vec<bool>>,
    c_prev: &[S],
    h_spec: Option<&QuantSpec<S>>,
    gates_override: Option<Vec<S>>,
) -> StepCache<S> {
    let n = c_prev.len();
    let gates = gates_override.unwrap_or_else(|| {
        act_in
            .iter()
            .enumerate()
            .map(|(j, &z)| if j < 3 * n { sigmoid(z) } else { z.tanh() })
            .collect()
    });
    let (f, rest) = gates.split_at(n);
    let (i, rest) = rest.split_at(n);
    let (o, g) = rest.split_at(n);
    let c: Vec<S> = (0..n).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<S> = c.iter().map(|v| v.tanh()).collect();
    let h_raw: Vec<S> = (0..n).map(|k| o[k] * tanh_c[k]).collect();
    let (h, h_pass) = match h_spec {
        Some(spec) => (
            h_raw.iter().map(|&v| spec.quantize(v)).collect(),
            Some(h_raw.iter().map(|&v| spec.contains(v)).collect()),
        ),
        None => (h_raw, None),
    };
    StepCache {
        v,
        x_pass,
        step_weights,
        act_in,
        adc_pass,
        gates,
        c_prev: c_prev.to_vec(),
        c,
        tanh_c,
        h_pass,
        h,
    }
}

/// Gradients of a sequence loss.
#[derive(Clone, Debug)]
pub struct LstmGrads<S> {
    /// Gradient for the latent concatenated weights `[W_f | W_i | W_o | W_c]`.
    pub weights: Matrix<S>,
    /// Gradient with respect to each step's input `x_t`.
    pub inputs: Vec<Vec<S>>,
    pub h0: Vec<S>,
    pub c0: Vec<S>,
}

impl<S: Scalar> LstmGrads<S> {
    pub fn gate(&self, gate: Gate, hidden_size: usize) -> Matrix<S> {
        self.weights.columns(gate.block() * hidden_size, hidden_size)
    }
}

#[inline]
fn pass(mask: &Option<Vec<bool>>, k: usize) -> bool {
    mask.as_ref().is_none_or(|m| m[k])
}

/// Backpropagation through time.
///
/// `dh[t]` is the loss gradient arriving at `h_t` from outside the cell (the
/// output head). Gradients cross every quantizer by the clipped
/// straight-through rule recorded in the cache.
pub fn lstm_backward<S: Scalar>(
    params: &LstmParams<S>,
    cache: &SequenceCache<S>,
    dh: &[Vec<S>],
) -> Result<LstmGrads<S>> {
    let (m, n) = (params.input_size, params.hidden_size);
    if cache.input_size != m || cache.hidden_size != n {
        return Err(Error::Cache(format!(
            "cache recorded for {}x{} cell, params are {m}x{n}",
            cache.input_size, cache.hidden_size
        )));
    }
    if cache.steps.is_empty() {
        return Err(Error::Cache("no recorded steps".into()));
    }
    if dh.len() != cache.steps.len() {
        return Err(Error::Cache(format!("{} upstream gradients for {} steps", dh.len(), cache.steps.len())));
    }
    if let Some(bad) = dh.iter().find(|g| g.len() != n) {
        return Err(Error::dim("upstream hidden gradient", n, bad.len()));
    }

    let mut dw = Matrix::zeros(m + n, 4 * n);
    let mut inputs = vec![Vec::new(); cache.steps.len()];
    let mut dh_next = vec![S::zero(); n];
    let mut dc_next = vec![S::zero(); n];
    let mut dz = vec![S::zero(); 4 * n];
    let mut dv = vec![S::zero(); m + n];

    for (t, step) in cache.steps.iter().enumerate().rev() {
        let (f, rest) = step.gates.split_at(n);
        let (i, rest) = rest.split_at(n);
        let (o, g) = rest.split_at(n);
        for k in 0..n {
            let mut dh_k = dh[t][k] + dh_next[k];
            if !pass(&step.h_pass, k) {
                dh_k = S::zero();
            }
            let tc = step.tanh_c[k];
            let d_o = dh_k * tc;
            let dc = dc_next[k] + dh_k * o[k] * (S::one() - tc * tc);
            let d_f = dc * step.c_prev[k];
            let d_i = dc * g[k];
            let d_g = dc * i[k];
            dc_next[k] = dc * f[k];
            for (block, d) in [(0, d_f), (1, d_i), (2, d_o), (3, d_g)] {
                let j = block * n + k;
                let act = if block == 3 { Activation::Tanh } else { Activation::Sigmoid };
                dz[j] = if pass(&step.adc_pass, j) { d * act.derivative(step.act_in[j]) } else { S::zero() };
            }
        }
        dw.add_outer(&step.v, &dz);
        let w = step.step_weights.as_ref().unwrap_or(&cache.weights);
        w.mul_vec_into(&dz, &mut dv);
        inputs[t] = (0..m).map(|k| if pass(&step.x_pass, k) { dv[k] } else { S::zero() }).collect();
        dh_next.copy_from_slice(&dv[m..]);
    }

    if let Some(spec) = &cache.weight_spec {
        for (g, &w) in dw.as_mut_slice().iter_mut().zip(params.weights.as_slice()) {
            *g = crate::quantizer::ste_backward(*g, w, spec);
        }
    }
    Ok(LstmGrads { weights: dw, inputs, h0: dh_next, c0: dc_next })
}
