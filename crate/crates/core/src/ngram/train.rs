use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::features::{push_features, Vocab};
use super::model::{NgramModel, TrainMeta, NEGATIVE, POSITIVE};
use super::tokenize::{NgramTokenizerConfig, Prepared};
use crate::error::{Error, Result};
use crate::rng;
use crate::trainset::{Label, LabeledSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: u32,
    pub lr: f64,
    pub dim: usize,
    pub bucket_count: u32,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            lr: 0.1,
            dim: 100,
            bucket_count: 2_000_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn unsegmented() -> Self {
        Self { epochs: 30, lr: 0.1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!("learning rate {} must be positive", self.lr)));
        }
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramTrainReport {
    /// Mean cross-entropy over the samples processed in each epoch.
    pub epoch_losses: Vec<f64>,
    pub samples: usize,
    /// Samples with no features; they advance the schedule but produce no update.
    pub featureless: usize,
}

pub(crate) fn mean_hidden<T: Float>(input: &[T], dim: usize, feats: &[u32], hidden: &mut [T]) {
    hidden.iter_mut().for_each(|h| *h = T::zero());
    if feats.is_empty() {
        return;
    }
    for &f in feats {
        let row = &input[f as usize * dim..(f as usize + 1) * dim];
        for (h, &w) in hidden.iter_mut().zip(row) {
            *h = *h + w;
        }
    }
    let scale = T::one() / T::from(feats.len()).unwrap();
    hidden.iter_mut().for_each(|h| *h = *h * scale);
}

fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn softmax2<T: Float>(output: &[T], hidden: &[T]) -> [T; 2] {
    let dim = hidden.len();
    let z0 = dot(&output[..dim], hidden);
    let z1 = dot(&output[dim..2 * dim], hidden);
    let m = z0.max(z1);
    let e0 = (z0 - m).exp();
    let e1 = (z1 - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// Loss and parameter gradients for one sample.
#[derive(Debug, Clone)]
pub struct SampleGradients<T> {
    pub loss: T,
    /// `2 × dim`, same layout as the output matrix.
    pub output: Vec<T>,
    /// Gradient for each distinct input row touched, sorted by row.
    pub input_rows: Vec<(u32, Vec<T>)>,
}

/// Cross-entropy of one sample and its analytic gradient with respect to
/// the output matrix and every input embedding row referenced by `feats`.
pub fn loss_and_gradients<T: Float>(
    input: &[T],
    output: &[T],
    dim: usize,
    feats: &[u32],
    label: usize,
) -> SampleGradients<T> {
    let mut hidden = vec![T::zero(); dim];
    mean_hidden(input, dim, feats, &mut hidden);
    let probs = softmax2(output, &hidden);
    let loss = -probs[label].ln();
    let mut g_out = vec![T::zero(); 2 * dim];
    let mut g_hidden = vec![T::zero(); dim];
    for k in 0..2 {
        let gk = probs[k] - if k == label { T::one() } else { T::zero() };
        for d in 0..dim {
            g_out[k * dim + d] = gk * hidden[d];
            g_hidden[d] = g_hidden[d] + gk * output[k * dim + d];
        }
    }
    let mut rows: Vec<u32> = feats.to_vec();
    rows.sort_unstable();
    rows.dedup();
    let m = T::from(feats.len().max(1)).unwrap();
    let input_rows = rows
        .into_iter()
        .map(|r| {
            let mult = T::from(feats.iter().filter(|&&f| f == r).count()).unwrap();
            (r, g_hidden.iter().map(|&g| g * mult / m).collect())
        })
        .collect();
    SampleGradients { loss, output: g_out, input_rows }
}

struct Step {
    hidden: Vec<f32>,
    g_hidden: Vec<f32>,
}

impl Step {
    /// One SGD update; returns the pre-update loss.
    fn apply(&mut self, model: &mut NgramModel, feats: &[u32], label: usize, lr: f32) -> f32 {
        let dim = model.dim;
        mean_hidden(&model.input, dim, feats, &mut self.hidden);
        let probs = softmax2(&model.output, &self.hidden);
        let loss = -probs[label].ln();
        self.g_hidden.iter_mut().for_each(|g| *g = 0.0);
        for (k, p) in probs.iter().enumerate() {
            let gk = p - if k == label { 1.0 } else { 0.0 };
            let row = &mut model.output[k * dim..(k + 1) * dim];
            for ((w, g), h) in row.iter_mut().zip(&mut self.g_hidden).zip(&self.hidden) {
                *g += gk * *w;
                *w -= lr * gk * h;
            }
        }
        let scale = lr / feats.len() as f32;
        for &f in feats {
            let row = &mut model.input[f as usize * dim..(f as usize + 1) * dim];
            for (w, &g) in row.iter_mut().zip(&self.g_hidden) {
                *w -= scale * g;
            }
        }
        loss
    }
}

/// Train the classifier with single-threaded SGD.
///
/// Samples are visited in a freshly seeded shuffle each epoch. The learning
/// rate decays linearly from `cfg.lr` to zero over all processed samples.
pub fn train_ngram(
    samples: &[LabeledSample],
    tokenizer: NgramTokenizerConfig,
    cfg: TrainConfig,
) -> Result<(NgramModel, NgramTrainReport)> {
    tokenizer.validate()?;
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let has_pos = samples.iter().any(|s| s.label == Label::Positive);
    let has_neg = samples.iter().any(|s| s.label == Label::Negative);
    if !(has_pos && has_neg) {
        return Err(Error::SingleLabel);
    }

    let prepared: Vec<Prepared<'_>> = samples.iter().map(|s| Prepared::new(&s.text, &tokenizer)).collect();
    let vocab = Vocab::build(prepared.iter().flat_map(|p| p.tokens()), tokenizer.min_count);
    let mut feats: Vec<Vec<u32>> = Vec::with_capacity(samples.len());
    for p in &prepared {
        let mut f = Vec::new();
        push_features(p, &vocab, tokenizer.ngram_order, cfg.bucket_count, &mut f);
        feats.push(f);
    }
    drop(prepared);

    let dim = cfg.dim;
    let rows = vocab.len() + cfg.bucket_count as usize;
    let mut init_rng = rng::derived(cfg.seed, "ngram-init");
    let bound = 1.0 / dim as f32;
    let input: Vec<f32> = (0..rows * dim).map(|_| init_rng.gen_range(-bound..bound)).collect();
    let mut model = NgramModel {
        tokenizer,
        vocab,
        bucket_count: cfg.bucket_count,
        dim,
        input,
        output: vec![0.0; 2 * dim],
        meta: TrainMeta { epochs: cfg.epochs, lr: cfg.lr, seed: cfg.seed },
    };

    let labels: Vec<usize> = samples
        .iter()
        .map(|s| if s.label == Label::Positive { POSITIVE } else { NEGATIVE })
        .collect();
    let featureless = feats.iter().filter(|f| f.is_empty()).count();
    let total = cfg.epochs as u64 * samples.len() as u64;
    let mut processed: u64 = 0;
    let mut order_rng = rng::derived(cfg.seed, "ngram-order");
    let mut step = Step { hidden: vec![0.0; dim], g_hidden: vec![0.0; dim] };
    let mut epoch_losses = Vec::with_capacity(cfg.epochs as usize);

    for epoch in 0..cfg.epochs as usize {
        let order = rng::shuffled_indices(&mut order_rng, samples.len());
        let mut loss_sum = 0.0f64;
        let mut seen = 0usize;
        for i in order {
            let lr = (cfg.lr * (1.0 - processed as f64 / total as f64)) as f32;
            processed += 1;
            if feats[i].is_empty() {
                continue;
            }
            loss_sum += f64::from(step.apply(&mut model, &feats[i], labels[i], lr));
            seen += 1;
        }
        let mean = if seen == 0 { 0.0 } else { loss_sum / seen as f64 };
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss { epoch: epoch + 1 });
        }
        epoch_losses.push(mean);
    }
    if !model.input.iter().chain(&model.output).all(|w| w.is_finite()) {
        return Err(Error::NonFiniteLoss { epoch: cfg.epochs as usize });
    }

    Ok((
        model,
        NgramTrainReport { epoch_losses, samples: samples.len(), featureless },
    ))
}
