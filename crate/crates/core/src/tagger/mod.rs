//! Window-MLP softmax tagger.
//!
//! For each token the embeddings of the `2w+1` surrounding tokens are
//! concatenated, passed through a tanh hidden layer (optionally with inverted
//! dropout) and a softmax output layer. Positions outside the sentence use
//! the padding embedding.

mod checkpoint;

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Instance, PAD_ID};
use crate::rng::TclRng;
use crate::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggerConfig {
    pub embed_dim: usize,
    /// Context half-width; the window covers `2 * window + 1` tokens.
    pub window: usize,
    pub hidden_dim: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            embed_dim: 32,
            window: 2,
            hidden_dim: 128,
            dropout_rate: 0.1,
            learning_rate: 0.1,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TaggerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.batch_size == 0 {
            return Err(Error::Config("embed_dim, hidden_dim and batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout_rate must be in [0, 1), got {}", self.dropout_rate)));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }

    pub fn context_len(&self) -> usize {
        2 * self.window + 1
    }
}

/// Dropout behaviour of a forward pass.
pub enum DropoutMode<'a> {
    Off,
    /// Inverted dropout on the hidden layer: units are kept with
    /// probability `1 - rate` and scaled by `1 / (1 - rate)`.
    On { rate: f64, rng: &'a mut TclRng },
}

/// Predicted label distribution for one token.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    pub probs: Vec<f64>,
}

impl TokenDistribution {
    pub fn new(probs: Vec<f64>) -> Self {
        TokenDistribution { probs }
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the most probable label; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// All learnable tensors. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerParams {
    pub embedding: Array2<f64>,
    pub hidden_w: Array2<f64>,
    pub hidden_b: Array1<f64>,
    pub output_w: Array2<f64>,
    pub output_b: Array1<f64>,
}

pub(crate) const TENSOR_NAMES: [&str; 5] = ["embedding", "hidden_w", "hidden_b", "output_w", "output_b"];

struct BatchCache {
    inputs: Array2<f64>,
    window_ids: Vec<u32>,
    hidden: Array2<f64>,
    mask: Option<Array2<f64>>,
    dropped: Array2<f64>,
    logits: Array2<f64>,
}

impl TaggerParams {
    /// Uniform(-0.1, 0.1) weights and embeddings, zero biases.
    pub fn init(cfg: &TaggerConfig, vocab_size: usize, num_labels: usize, rng: &mut TclRng) -> Self {
        let mut uniform = |rows: usize, cols: usize| {
            Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-0.1..0.1))
        };
        let embedding = uniform(vocab_size, cfg.embed_dim);
        let hidden_w = uniform(cfg.context_len() * cfg.embed_dim, cfg.hidden_dim);
        let output_w = uniform(cfg.hidden_dim, num_labels);
        TaggerParams {
            embedding,
            hidden_w,
            hidden_b: Array1::zeros(cfg.hidden_dim),
            output_w,
            output_b: Array1::zeros(num_labels),
        }
    }

    pub fn zeros_like(&self) -> Self {
        TaggerParams {
            embedding: Array2::zeros(self.embedding.raw_dim()),
            hidden_w: Array2::zeros(self.hidden_w.raw_dim()),
            hidden_b: Array1::zeros(self.hidden_b.raw_dim()),
            output_w: Array2::zeros(self.output_w.raw_dim()),
            output_b: Array1::zeros(self.output_b.raw_dim()),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.nrows()
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.ncols()
    }

    pub fn context_len(&self) -> usize {
        self.hidden_w.nrows() / self.embed_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_w.ncols()
    }

    pub fn num_labels(&self) -> usize {
        self.output_w.ncols()
    }

    /// Flat views of every tensor, in [`TENSOR_NAMES`] order.
    pub fn slices(&self) -> [(&'static str, &[f64]); 5] {
        fn v(a: Option<&[f64]>) -> &[f64] {
            a.expect("parameter tensors are contiguous")
        }
        [
            (TENSOR_NAMES[0], v(self.embedding.as_slice())),
            (TENSOR_NAMES[1], v(self.hidden_w.as_slice())),
            (TENSOR_NAMES[2], v(self.hidden_b.as_slice())),
            (TENSOR_NAMES[3], v(self.output_w.as_slice())),
            (TENSOR_NAMES[4], v(self.output_b.as_slice())),
        ]
    }

    pub fn slices_mut(&mut self) -> [(&'static str, &mut [f64]); 5] {
        fn v(a: Option<&mut [f64]>) -> &mut [f64] {
            a.expect("parameter tensors are contiguous")
        }
        [
            (TENSOR_NAMES[0], v(self.embedding.as_slice_mut())),
            (TENSOR_NAMES[1], v(self.hidden_w.as_slice_mut())),
            (TENSOR_NAMES[2], v(self.hidden_b.as_slice_mut())),
            (TENSOR_NAMES[3], v(self.output_w.as_slice_mut())),
            (TENSOR_NAMES[4], v(self.output_b.as_slice_mut())),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|(_, s)| s.iter().all(|x| x.is_finite()))
    }

    fn check_ids(&self, token_ids: &[u32]) -> Result<()> {
        let vocab_size = self.vocab_size();
        match token_ids.iter().find(|&&id| id as usize >= vocab_size) {
            Some(&id) => Err(Error::TokenOutOfRange { id, vocab_size }),
            None => Ok(()),
        }
    }

    /// Context-window token ids for every position, padded at the edges.
    fn windows(&self, token_ids: &[u32], out: &mut Vec<u32>) {
        let ctx = self.context_len();
        let half = ctx / 2;
        for i in 0..token_ids.len() {
            for j in 0..ctx {
                let pos = i as isize + j as isize - half as isize;
                let id = if pos < 0 || pos as usize >= token_ids.len() {
                    PAD_ID
                } else {
                    token_ids[pos as usize]
                };
                out.push(id);
            }
        }
    }

    fn forward_batch(&self, sentences: &[&[u32]], dropout: DropoutMode<'_>) -> Result<BatchCache> {
        let d = self.embed_dim();
        let ctx = self.context_len();
        let n: usize = sentences.iter().map(|s| s.len()).sum();
        let mut window_ids = Vec::with_capacity(n * ctx);
        for s in sentences {
            self.check_ids(s)?;
            self.windows(s, &mut window_ids);
        }

        let mut inputs = Array2::zeros((n, ctx * d));
        for (row, ids) in inputs.outer_iter_mut().zip(window_ids.chunks_exact(ctx)) {
            let mut row = row;
            for (j, &id) in ids.iter().enumerate() {
                row.slice_mut(s![j * d..(j + 1) * d]).assign(&self.embedding.row(id as usize));
            }
        }

        let mut hidden = inputs.dot(&self.hidden_w) + &self.hidden_b;
        hidden.mapv_inplace(f64::tanh);

        let (mask, dropped) = match dropout {
            DropoutMode::On { rate, rng } if rate > 0.0 => {
                let keep = 1.0 - rate;
                let scale = 1.0 / keep;
                let mask = Array2::from_shape_simple_fn(hidden.raw_dim(), || {
                    if rng.gen::<f64>() < keep {
                        scale
                    } else {
                        0.0
                    }
                });
                let dropped = &hidden * &mask;
                (Some(mask), dropped)
            }
            _ => (None, hidden.clone()),
        };

        let logits = dropped.dot(&self.output_w) + &self.output_b;
        Ok(BatchCache {
            inputs,
            window_ids,
            hidden,
            mask,
            dropped,
            logits,
        })
    }

    /// Hidden-layer activations after dropout, one row per token.
    pub fn hidden_activations(&self, token_ids: &[u32], dropout: DropoutMode<'_>) -> Result<Array2<f64>> {
        Ok(self.forward_batch(&[token_ids], dropout)?.dropped)
    }

    /// Per-token label distributions.
    pub fn forward(&self, token_ids: &[u32], dropout: DropoutMode<'_>) -> Result<Vec<TokenDistribution>> {
        let cache = self.forward_batch(&[token_ids], dropout)?;
        Ok(softmax_rows(cache.logits.view())
            .outer_iter()
            .map(|row| TokenDistribution::new(row.to_vec()))
            .collect())
    }

    /// Argmax label per token with dropout off.
    pub fn predict(&self, token_ids: &[u32]) -> Result<Vec<usize>> {
        Ok(self
            .forward(token_ids, DropoutMode::Off)?
            .iter()
            .map(TokenDistribution::argmax)
            .collect())
    }

    /// Mean token cross-entropy over the batch and its gradient.
    pub fn loss_and_gradients(&self, batch: &[&Instance], dropout: DropoutMode<'_>) -> Result<(f64, TaggerParams)> {
        if batch.is_empty() {
            return Err(Error::Empty("training batch is empty".into()));
        }
        let seqs: Vec<&[u32]> = batch.iter().map(|i| i.token_ids.as_slice()).collect();
        let gold: Vec<usize> = batch.iter().flat_map(|i| i.labels.iter().copied()).collect();
        let num_labels = self.num_labels();
        if let Some(&bad) = gold.iter().find(|&&l| l >= num_labels) {
            return Err(Error::ShapeMismatch(format!("gold label {bad} but the tagger has {num_labels} outputs")));
        }
        let cache = self.forward_batch(&seqs, dropout)?;
        let n = gold.len();
        if n == 0 {
            return Err(Error::Empty("training batch has no tokens".into()));
        }

        // dL/dlogits = (softmax - onehot) / n
        let log_probs = log_softmax_rows(cache.logits.view());
        let mut loss = 0.0;
        let mut d_logits = log_probs.mapv(f64::exp);
        for (r, &g) in gold.iter().enumerate() {
            loss -= log_probs[[r, g]];
            d_logits[[r, g]] -= 1.0;
        }
        let inv_n = 1.0 / n as f64;
        loss *= inv_n;
        d_logits *= inv_n;

        let mut grads = self.zeros_like();
        grads.output_w = cache.dropped.t().dot(&d_logits);
        grads.output_b = d_logits.sum_axis(Axis(0));

        let mut d_hidden = d_logits.dot(&self.output_w.t());
        if let Some(mask) = &cache.mask {
            d_hidden *= mask;
        }
        Zip::from(&mut d_hidden)
            .and(&cache.hidden)
            .for_each(|g, &h| *g *= 1.0 - h * h);

        grads.hidden_w = cache.inputs.t().dot(&d_hidden);
        grads.hidden_b = d_hidden.sum_axis(Axis(0));

        let d_inputs = d_hidden.dot(&self.hidden_w.t());
        let d = self.embed_dim();
        let ctx = self.context_len();
        for (row, ids) in d_inputs.outer_iter().zip(cache.window_ids.chunks_exact(ctx)) {
            for (j, &id) in ids.iter().enumerate() {
                let mut target = grads.embedding.row_mut(id as usize);
                target += &row.slice(s![j * d..(j + 1) * d]);
            }
        }
        Ok((loss, grads))
    }

    /// `param -= lr * grad`; refuses non-finite gradients.
    pub fn sgd_step(&mut self, grads: &TaggerParams, learning_rate: f64) -> Result<()> {
        for (name, g) in grads.slices() {
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { tensor: name });
            }
        }
        for ((name, p), (_, g)) in self.slices_mut().into_iter().zip(grads.slices()) {
            if p.len() != g.len() {
                return Err(Error::ShapeMismatch(format!("gradient for `{name}` has the wrong shape")));
            }
            for (p, g) in p.iter_mut().zip(g) {
                *p -= learning_rate * g;
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { tensor: name });
            }
        }
        Ok(())
    }

    /// One shuffled pass of minibatch SGD over `data`; returns the mean batch loss.
    pub fn train_one_epoch(&mut self, data: &[&Instance], cfg: &TaggerConfig, rng: &mut TclRng) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Empty("no training sentences".into()));
        }
        let mut order: Vec<&Instance> = data.to_vec();
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grads) = self.loss_and_gradients(
                batch,
                DropoutMode::On {
                    rate: cfg.dropout_rate,
                    rng: &mut *rng,
                },
            )?;
            self.sgd_step(&grads, cfg.learning_rate)?;
            total += loss;
            batches += 1;
        }
        Ok(total / batches as f64)
    }
}

fn log_softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.outer_iter_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|z| z - lse);
    }
    out
}

fn softmax_rows(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.outer_iter_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|z| (z - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}
