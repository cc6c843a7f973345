//! Single-hidden-layer perceptron over document embeddings.
//!
//! `score = sigmoid(w2 · dropout(relu(W1 x + b1)) + b2)`, trained with
//! binary cross-entropy and AdamW. Dropout is inverted (kept units are
//! scaled by `1 / (1 - p)` during training), so inference is the plain
//! forward pass.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng;
use crate::trainset::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub epochs: u32,
    pub lr: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            input_dim: 768,
            hidden_dim: 256,
            epochs: 6,
            lr: 3e-4,
            dropout: 0.2,
            batch_size: 256,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return bad("layer dimensions must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch size must be >= 1");
        }
        Ok(())
    }
}

/// All weights in one flat buffer: `W1` (hidden × input, row-major), `b1`,
/// `w2` (hidden), `b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<T> {
    input_dim: usize,
    hidden_dim: usize,
    values: Vec<T>,
}

impl<T: Float> MlpParams<T> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self { input_dim, hidden_dim, values: vec![T::zero(); Self::count(input_dim, hidden_dim)] }
    }

    pub fn count(input_dim: usize, hidden_dim: usize) -> usize {
        hidden_dim * input_dim + 2 * hidden_dim + 1
    }

    pub fn from_values(input_dim: usize, hidden_dim: usize, values: Vec<T>) -> Result<Self> {
        let expected = Self::count(input_dim, hidden_dim);
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        Ok(Self { input_dim, hidden_dim, values })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn cast<U: Float>(&self) -> MlpParams<U> {
        MlpParams {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            values: self.values.iter().map(|&v| U::from(v).unwrap()).collect(),
        }
    }

    fn split(&self) -> (&[T], &[T], &[T], T) {
        let (w1, rest) = self.values.split_at(self.hidden_dim * self.input_dim);
        let (b1, rest) = rest.split_at(self.hidden_dim);
        let (w2, b2) = rest.split_at(self.hidden_dim);
        (w1, b1, w2, b2[0])
    }

    pub fn w1(&self) -> &[T] {
        self.split().0
    }

    pub fn b1(&self) -> &[T] {
        self.split().1
    }

    pub fn w2(&self) -> &[T] {
        self.split().2
    }

    pub fn b2(&self) -> T {
        self.split().3
    }

    /// Pre-activations of the hidden layer.
    fn hidden_pre(&self, x: &[T], out: &mut [T]) {
        let (w1, b1, _, _) = self.split();
        for (j, o) in out.iter_mut().enumerate() {
            let row = &w1[j * self.input_dim..(j + 1) * self.input_dim];
            *o = b1[j] + dot(row, x);
        }
    }

    /// Output logit. `mask[j]` multiplies hidden unit `j` after the ReLU.
    pub fn logit(&self, x: &[T], mask: Option<&[T]>, scratch: &mut Vec<T>) -> T {
        scratch.resize(self.hidden_dim, T::zero());
        self.hidden_pre(x, scratch);
        let (_, _, w2, b2) = self.split();
        let mut z = b2;
        for j in 0..self.hidden_dim {
            let mut h = scratch[j].max(T::zero());
            if let Some(m) = mask {
                h = h * m[j];
            }
            z = z + w2[j] * h;
        }
        z
    }

    /// Adds this sample's gradient of the BCE loss into `grad` and returns the loss.
    pub fn accumulate_gradient(&self, x: &[T], target: T, mask: Option<&[T]>, grad: &mut MlpParams<T>, scratch: &mut Vec<T>) -> T {
        let hdim = self.hidden_dim;
        let idim = self.input_dim;
        scratch.resize(hdim, T::zero());
        self.hidden_pre(x, scratch);
        let (_, _, w2, b2) = self.split();
        let mut z = b2;
        for j in 0..hdim {
            let m = mask.map_or(T::one(), |m| m[j]);
            z = z + w2[j] * scratch[j].max(T::zero()) * m;
        }
        let loss = bce_with_logit(z, target);
        let dz = sigmoid(z) - target;

        let (gw1, rest) = grad.values.split_at_mut(hdim * idim);
        let (gb1, rest) = rest.split_at_mut(hdim);
        let (gw2, gb2) = rest.split_at_mut(hdim);
        gb2[0] = gb2[0] + dz;
        for j in 0..hdim {
            let m = mask.map_or(T::one(), |m| m[j]);
            let pre = scratch[j];
            let h = pre.max(T::zero()) * m;
            gw2[j] = gw2[j] + dz * h;
            if pre <= T::zero() || m == T::zero() {
                continue;
            }
            let dpre = dz * w2[j] * m;
            gb1[j] = gb1[j] + dpre;
            let row = &mut gw1[j * idim..(j + 1) * idim];
            for (g, &xi) in row.iter_mut().zip(x) {
                *g = *g + dpre * xi;
            }
        }
        loss
    }

    /// Mean BCE over a batch and its gradient (no dropout).
    pub fn batch_loss_and_gradient(&self, xs: &[&[T]], targets: &[T]) -> (T, MlpParams<T>) {
        let mut grad = MlpParams::zeros(self.input_dim, self.hidden_dim);
        let mut scratch = Vec::new();
        let mut loss = T::zero();
        for (x, &t) in xs.iter().zip(targets) {
            loss = loss + self.accumulate_gradient(x, t, None, &mut grad, &mut scratch);
        }
        let n = T::from(xs.len().max(1)).unwrap();
        grad.values.iter_mut().for_each(|g| *g = *g / n);
        (loss / n, grad)
    }

    /// Mean BCE over a batch (no dropout).
    pub fn batch_loss(&self, xs: &[&[T]], targets: &[T]) -> T {
        let mut scratch = Vec::new();
        let total = xs
            .iter()
            .zip(targets)
            .fold(T::zero(), |acc, (x, &t)| acc + bce_with_logit(self.logit(x, None, &mut scratch), t));
        total / T::from(xs.len().max(1)).unwrap()
    }
}

#[inline]
pub(crate) fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    // Eight independent partial sums keep the f32 path vectorizable.
    let mut acc = [T::zero(); 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        for l in 0..8 {
            acc[l] = acc[l] + a[c * 8 + l] * b[c * 8 + l];
        }
    }
    let mut s = T::zero();
    for v in acc {
        s = s + v;
    }
    for i in chunks * 8..a.len() {
        s = s + a[i] * b[i];
    }
    s
}

pub fn sigmoid<T: Float>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `-[y ln σ(z) + (1-y) ln(1-σ(z))]`, computed stably from the logit.
pub fn bce_with_logit<T: Float>(z: T, y: T) -> T {
    z.max(T::zero()) - z * y + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub params: MlpParams<f32>,
    pub config: MlpConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    Infer,
    /// Dropout active with a mask drawn from `mask_seed`.
    Train { mask_seed: u64 },
}

fn dropout_mask(rng: &mut rng::Rng, hidden: usize, p: f64, out: &mut Vec<f32>) {
    let keep_scale = (1.0 / (1.0 - p)) as f32;
    out.clear();
    out.extend((0..hidden).map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep_scale }));
}

impl MlpModel {
    /// Parameters drawn uniformly from `±1/sqrt(fan_in)` per layer.
    pub fn init(config: MlpConfig) -> Self {
        let mut r = rng::derived(config.seed, "mlp-init");
        let mut params = MlpParams::<f32>::zeros(config.input_dim, config.hidden_dim);
        let n1 = config.hidden_dim * config.input_dim + config.hidden_dim;
        let b_in = (1.0 / libm::sqrt(config.input_dim as f64)) as f32;
        let b_hid = (1.0 / libm::sqrt(config.hidden_dim as f64)) as f32;
        for (i, v) in params.values.iter_mut().enumerate() {
            let b = if i < n1 { b_in } else { b_hid };
            *v = r.gen_range(-b..b);
        }
        Self { params, config }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.params.input_dim != self.config.input_dim || self.params.hidden_dim != self.config.hidden_dim {
            return Err(Error::InvalidConfig("parameter shapes disagree with config".into()));
        }
        if !self.params.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("mlp weights".into()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f32], mode: ForwardMode) -> Result<f32> {
        if x.len() != self.params.input_dim {
            return Err(Error::DimensionMismatch { expected: self.params.input_dim, got: x.len() });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("mlp input".into()));
        }
        let mut scratch = Vec::new();
        let z = match mode {
            ForwardMode::Infer => self.params.logit(x, None, &mut scratch),
            ForwardMode::Train { mask_seed } => {
                let mut mask = Vec::new();
                dropout_mask(&mut rng::seeded(mask_seed), self.params.hidden_dim, self.config.dropout, &mut mask);
                self.params.logit(x, Some(&mask), &mut scratch)
            }
        };
        Ok(sigmoid(z))
    }

    /// Inference-mode score for every row, in row order.
    pub fn score_matrix(&self, matrix: &EmbeddingMatrix) -> Result<Vec<f32>> {
        let mut scorer = MlpScorer::new(self, matrix.dim())?;
        (0..matrix.len()).map(|i| scorer.score(matrix.row(i))).collect()
    }
}

pub fn mlp_forward(model: &MlpModel, x: &[f32], mode: ForwardMode) -> Result<f32> {
    model.forward(x, mode)
}

/// Inference with a reusable hidden buffer.
pub struct MlpScorer<'m> {
    model: &'m MlpModel,
    scratch: Vec<f32>,
}

impl<'m> MlpScorer<'m> {
    pub fn new(model: &'m MlpModel, dim: usize) -> Result<Self> {
        if dim != model.params.input_dim {
            return Err(Error::DimensionMismatch { expected: model.params.input_dim, got: dim });
        }
        Ok(Self { model, scratch: Vec::new() })
    }

    pub fn score(&mut self, x: &[f32]) -> Result<f32> {
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("mlp input".into()));
        }
        Ok(sigmoid(self.model.params.logit(x, None, &mut self.scratch)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpTrainReport {
    /// Inference-mode mean loss over the training set before the first update.
    pub initial_loss: f64,
    /// Inference-mode mean loss over the training set after the last epoch.
    pub final_loss: f64,
    /// Mean dropout-mode batch loss seen during each epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
}

fn resolve<'a, S: AsRef<str>>(examples: &[(S, Label)], matrix: &'a EmbeddingMatrix) -> Result<(Vec<&'a [f32]>, Vec<f32>)> {
    let index = matrix.index();
    let mut xs = Vec::with_capacity(examples.len());
    let mut ys = Vec::with_capacity(examples.len());
    for (id, label) in examples {
        let i = *index.get(id.as_ref()).ok_or_else(|| Error::MissingEmbedding(id.as_ref().into()))?;
        xs.push(matrix.row(i));
        ys.push(if *label == Label::Positive { 1.0 } else { 0.0 });
    }
    Ok((xs, ys))
}

struct AdamW {
    m: Vec<f32>,
    v: Vec<f32>,
    t: i32,
}

impl AdamW {
    fn step(&mut self, params: &mut [f32], grad: &[f32], cfg: &MlpConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1 as f32, cfg.beta2 as f32);
        let lr = cfg.lr as f32;
        let decay = 1.0 - lr * cfg.weight_decay as f32;
        let c1 = 1.0 - libm::powf(b1, self.t as f32);
        let c2 = 1.0 - libm::powf(b2, self.t as f32);
        let eps = cfg.eps as f32;
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] = params[i] * decay - lr * mhat / (libm::sqrtf(vhat) + eps);
        }
    }
}

/// Train with mini-batch AdamW; single-threaded and bit-deterministic for a
/// fixed `config.seed`.
pub fn train_mlp<S: AsRef<str>>(
    examples: &[(S, Label)],
    matrix: &EmbeddingMatrix,
    config: MlpConfig,
) -> Result<(MlpModel, MlpTrainReport)> {
    config.validate()?;
    if matrix.dim() != config.input_dim {
        return Err(Error::DimensionMismatch { expected: config.input_dim, got: matrix.dim() });
    }
    if examples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let (xs, ys) = resolve(examples, matrix)?;
    if !(ys.contains(&1.0) && ys.contains(&0.0)) {
        return Err(Error::SingleLabel);
    }

    let mut model = MlpModel::init(config);
    let initial_loss = f64::from(model.params.batch_loss(&xs, &ys));
    let n = model.params.values.len();
    let mut opt = AdamW { m: vec![0.0; n], v: vec![0.0; n], t: 0 };
    let mut grad = MlpParams::<f32>::zeros(config.input_dim, config.hidden_dim);
    let mut order_rng = rng::derived(config.seed, "mlp-order");
    let mut mask_rng = rng::derived(config.seed, "mlp-dropout");
    let mut mask = Vec::new();
    let mut scratch = Vec::new();
    let mut epoch_losses = Vec::new();

    for epoch in 0..config.epochs as usize {
        let order = rng::shuffled_indices(&mut order_rng, xs.len());
        let mut sum = 0.0f64;
        for batch in order.chunks(config.batch_size) {
            grad.values.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0f32;
            for &i in batch {
                dropout_mask(&mut mask_rng, config.hidden_dim, config.dropout, &mut mask);
                batch_loss += model.params.accumulate_gradient(xs[i], ys[i], Some(&mask), &mut grad, &mut scratch);
            }
            let inv = 1.0 / batch.len() as f32;
            grad.values.iter_mut().for_each(|g| *g *= inv);
            opt.step(&mut model.params.values, &grad.values, &config);
            sum += f64::from(batch_loss);
        }
        let mean = sum / xs.len() as f64;
        if !mean.is_finite() || !model.params.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteLoss { epoch: epoch + 1 });
        }
        epoch_losses.push(mean);
    }
    let final_loss = f64::from(model.params.batch_loss(&xs, &ys));
    Ok((
        model,
        MlpTrainReport { initial_loss, final_loss, epoch_losses, steps: opt.t as u64 },
    ))
}

/// Fraction of examples whose inference score lands on the correct side of 0.5.
pub fn accuracy<S: AsRef<str>>(model: &MlpModel, examples: &[(S, Label)], matrix: &EmbeddingMatrix) -> Result<f64> {
    let (xs, ys) = resolve(examples, matrix)?;
    let mut scorer = MlpScorer::new(model, matrix.dim())?;
    let mut correct = 0usize;
    for (x, y) in xs.iter().zip(&ys) {
        let s = scorer.score(x)?;
        if (s >= 0.5) == (*y == 1.0) {
            correct += 1;
        }
    }
    Ok(correct as f64 / xs.len().max(1) as f64)
}
