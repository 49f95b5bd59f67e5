//! Sequence model around the cell: input encoding, optional embedding, and a
//! full-precision dense + softmax head that sits outside the crossbar.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::{LstmGrads, LstmParams, SequenceCache};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::seed::Rng;
use crate::tasks::{SeqInput, SequenceDataset, Target, TaskKind};

/// How token inputs are expanded into cell inputs when there is no embedding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputEncoding {
    /// One-hot with entries in `{0, 1}`.
    OneHot,
    /// One-hot mapped to `{-1, +1}`, which survives a 1-bit symmetric DAC.
    #[default]
    Bipolar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model<S> {
    pub kind: TaskKind,
    pub lstm: LstmParams<S>,
    /// `input_vocab x input_size` lookup table for word inputs.
    pub embedding: Option<Matrix<S>>,
    pub encoding: InputEncoding,
    /// `hidden_size x num_outputs`.
    pub head: Matrix<S>,
    pub head_bias: Vec<S>,
}

/// Gradients for every trainable tensor of a [`Model`].
#[derive(Clone, Debug)]
pub struct ModelGrads<S> {
    pub lstm: Matrix<S>,
    pub embedding: Option<Matrix<S>>,
    pub head: Matrix<S>,
    pub head_bias: Vec<S>,
}

impl<S: Scalar> ModelGrads<S> {
    pub fn zeros_like(model: &Model<S>) -> Self {
        let (r, c) = model.lstm.weights().shape();
        Self {
            lstm: Matrix::zeros(r, c),
            embedding: model.embedding.as_ref().map(|e| Matrix::zeros(e.rows(), e.cols())),
            head: Matrix::zeros(model.head.rows(), model.head.cols()),
            head_bias: vec![S::zero(); model.head_bias.len()],
        }
    }

    pub fn norm(&self) -> S {
        let mut s = self.lstm.sum_squares() + self.head.sum_squares();
        s += self.head_bias.iter().map(|&v| v * v).sum::<S>();
        if let Some(e) = &self.embedding {
            s += e.sum_squares();
        }
        s.sqrt()
    }

    pub fn scale(&mut self, k: S) {
        self.lstm.scale(k);
        self.head.scale(k);
        self.head_bias.iter_mut().for_each(|v| *v *= k);
        if let Some(e) = &mut self.embedding {
            e.scale(k);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lstm.is_finite()
            && self.head.is_finite()
            && self.head_bias.iter().all(|v| v.is_finite())
            && self.embedding.as_ref().is_none_or(Matrix::is_finite)
    }
}

/// Loss and counts from scoring one sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SeqScore {
    /// Summed negative log-likelihood in nats.
    pub nll: f64,
    pub correct: usize,
    pub targets: usize,
}

impl std::ops::AddAssign for SeqScore {
    fn add_assign(&mut self, o: Self) {
        self.nll += o.nll;
        self.correct += o.correct;
        self.targets += o.targets;
    }
}

impl<S: Scalar> Model<S> {
    pub fn is_finite(&self) -> bool {
        self.lstm.weights().is_finite()
            && self.head.is_finite()
            && self.head_bias.iter().all(|v| v.is_finite())
            && self.embedding.as_ref().is_none_or(Matrix::is_finite)
    }

    /// Fresh model shaped for `data`. LSTM weights are uniform in
    /// `[-init_scale, init_scale]`; the head uses `1/sqrt(n)`.
    pub fn new(data: &SequenceDataset, hidden_size: usize, init_scale: f64, rng: &mut Rng) -> Result<Self> {
        if hidden_size == 0 {
            return Err(Error::Config("hidden size must be positive".into()));
        }
        let m = data.input_dim;
        let lstm = LstmParams::random(m, hidden_size, init_scale, rng);
        let embedding = (data.kind == TaskKind::WordLm)
            .then(|| Matrix::from_fn(data.input_vocab, m, |_, _| S::lit(rng.random_range(-0.5..=0.5))));
        let hs = 1.0 / (hidden_size as f64).sqrt();
        let head = Matrix::from_fn(hidden_size, data.num_outputs, |_, _| S::lit(rng.random_range(-hs..=hs)));
        Ok(Self {
            kind: data.kind,
            lstm,
            embedding,
            encoding: InputEncoding::default(),
            head,
            head_bias: vec![S::zero(); data.num_outputs],
        })
    }

    pub fn input_size(&self) -> usize {
        self.lstm.input_size()
    }

    pub fn hidden_size(&self) -> usize {
        self.lstm.hidden_size()
    }

    pub fn num_outputs(&self) -> usize {
        self.head.cols()
    }

    /// Checks that `data` fits this model.
    pub fn check_dataset(&self, data: &SequenceDataset) -> Result<()> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.input_dim != self.input_size() {
            return Err(Error::dim("dataset input width", self.input_size(), data.input_dim));
        }
        if data.num_outputs != self.num_outputs() {
            return Err(Error::dim("dataset outputs", self.num_outputs(), data.num_outputs));
        }
        if let Some(e) = &self.embedding {
            if data.input_vocab != e.rows() {
                return Err(Error::dim("dataset input vocabulary", e.rows(), data.input_vocab));
            }
        }
        Ok(())
    }

    /// Cell input vectors for one sequence.
    pub fn encode(&self, input: &SeqInput) -> Result<Vec<Vec<S>>> {
        let m = self.input_size();
        match input {
            SeqInput::Dense(frames) => frames
                .iter()
                .map(|f| {
                    if f.len() != m {
                        return Err(Error::dim("input frame", m, f.len()));
                    }
                    Ok(f.iter().map(|&v| S::lit(v)).collect())
                })
                .collect(),
            SeqInput::Tokens(tokens) => tokens
                .iter()
                .map(|&t| {
                    let t = t as usize;
                    match &self.embedding {
                        Some(e) if t < e.rows() => Ok(e.row(t).to_vec()),
                        Some(e) => Err(Error::dim("input symbol", format!("< {}", e.rows()), t)),
                        None if t < m => {
                            let off = match self.encoding {
                                InputEncoding::OneHot => S::zero(),
                                InputEncoding::Bipolar => -S::one(),
                            };
                            let mut x = vec![off; m];
                            x[t] = S::one();
                            Ok(x)
                        }
                        None => Err(Error::dim("input symbol", format!("< {m}"), t)),
                    }
                })
                .collect(),
        }
    }

    fn logits(&self, h: &[S], out: &mut [S]) {
        self.head.vec_mul_into(h, out);
        for (o, &b) in out.iter_mut().zip(&self.head_bias) {
            *o += b;
        }
    }

    /// Scores the head on a recorded forward pass. With `grads`, accumulates
    /// head gradients of the summed NLL and returns the upstream gradient for
    /// every hidden state; steps carry targets `targets[t]` (`None` = unscored).
    pub(crate) fn head_pass(
        &self,
        cache: &SequenceCache<S>,
        targets: &[Option<u32>],
        mut grads: Option<&mut ModelGrads<S>>,
    ) -> (SeqScore, Vec<Vec<S>>) {
        let n = self.hidden_size();
        let v = self.num_outputs();
        let mut score = SeqScore::default();
        let mut dh = vec![vec![S::zero(); n]; cache.len()];
        let mut z = vec![S::zero(); v];
        for (t, step) in cache.steps().iter().enumerate() {
            let Some(y) = targets[t] else { continue };
            let y = y as usize;
            self.logits(step.h(), &mut z);
            let zy = z[y].as_f64();
            let zmax = z.iter().copied().fold(S::neg_infinity(), S::max);
            let mut sum = S::zero();
            for p in z.iter_mut() {
                *p = (*p - zmax).exp();
                sum += *p;
            }
            let log_sum = sum.ln().as_f64() + zmax.as_f64();
            score.nll += log_sum - zy;
            let best = (0..v).fold(0, |b, k| if z[k] > z[b] { k } else { b });
            score.correct += (best == y) as usize;
            score.targets += 1;
            if let Some(g) = grads.as_deref_mut() {
                z.iter_mut().for_each(|p| *p /= sum);
                z[y] -= S::one();
                g.head.add_outer(step.h(), &z);
                for (b, &d) in g.head_bias.iter_mut().zip(&z) {
                    *b += d;
                }
                self.head.mul_vec_into(&z, &mut dh[t]);
            }
        }
        (score, dh)
    }

    /// Scatters cell gradients into `grads`; `tokens` routes input gradients
    /// into embedding rows.
    pub(crate) fn accumulate_cell_grads(&self, tokens: Option<&[u32]>, cell: &LstmGrads<S>, grads: &mut ModelGrads<S>) {
        grads.lstm.add_assign(&cell.weights);
        if let (Some(ge), Some(tokens)) = (&mut grads.embedding, tokens) {
            for (&t, dx) in tokens.iter().zip(&cell.inputs) {
                for (g, &d) in ge.row_mut(t as usize).iter_mut().zip(dx) {
                    *g += d;
                }
            }
        }
    }

    /// All trainable values followed by their gradients, in a fixed order.
    pub(crate) fn zip_params<'a>(
        &'a mut self,
        grads: &'a ModelGrads<S>,
    ) -> impl Iterator<Item = (ParamGroup, &'a mut [S], &'a [S])> {
        let mut groups: Vec<(ParamGroup, &'a mut [S], &'a [S])> = vec![
            (ParamGroup::Cell, self.lstm.weights_mut().as_mut_slice(), grads.lstm.as_slice()),
            (ParamGroup::Head, self.head.as_mut_slice(), grads.head.as_slice()),
            (ParamGroup::Head, self.head_bias.as_mut_slice(), grads.head_bias.as_slice()),
        ];
        if let (Some(e), Some(ge)) = (&mut self.embedding, &grads.embedding) {
            groups.push((ParamGroup::Embedding, e.as_mut_slice(), ge.as_slice()));
        }
        groups.into_iter()
    }

    pub fn cast<T: Scalar>(&self) -> Model<T> {
        let cast_m = |m: &Matrix<S>| Matrix::from_fn(m.rows(), m.cols(), |r, c| T::lit(m.get(r, c).as_f64()));
        Model {
            kind: self.kind,
            lstm: self.lstm.cast(),
            embedding: self.embedding.as_ref().map(cast_m),
            encoding: self.encoding,
            head: cast_m(&self.head),
            head_bias: self.head_bias.iter().map(|v| T::lit(v.as_f64())).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ParamGroup {
    Cell,
    Head,
    Embedding,
}

/// Per-step targets of a sample; classification scores only the last step.
pub(crate) fn step_targets(target: &Target, len: usize) -> Vec<Option<u32>> {
    match target {
        Target::PerStep(t) => t.iter().map(|&y| Some(y)).collect(),
        Target::Label(l) => {
            let mut v = vec![None; len];
            if let Some(last) = v.last_mut() {
                *last = Some(*l);
            }
            v
        }
    }
}
