use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::features::{push_features, Vocab};
use super::tokenize::{NgramTokenizerConfig, Prepared};
use super::train::{mean_hidden, softmax2};
use crate::document::Document;
use crate::error::{Error, Result};

pub const NEGATIVE: usize = 0;
pub const POSITIVE: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub epochs: u32,
    pub lr: f64,
    pub seed: u64,
}

/// Trained hashed n-gram classifier. Immutable after training; share it
/// across scoring workers, each with its own [`NgramModel::scorer`].
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    pub tokenizer: NgramTokenizerConfig,
    pub vocab: Vocab,
    pub bucket_count: u32,
    pub dim: usize,
    /// `(vocab.len() + bucket_count) × dim`, row-major.
    pub input: Vec<f32>,
    /// `2 × dim`, row 0 negative, row 1 positive.
    pub output: Vec<f32>,
    pub meta: TrainMeta,
}

impl NgramModel {
    pub fn rows(&self) -> usize {
        self.vocab.len() + self.bucket_count as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.tokenizer.validate()?;
        if self.input.len() != self.rows() * self.dim {
            return Err(Error::DimensionMismatch { expected: self.rows() * self.dim, got: self.input.len() });
        }
        if self.output.len() != 2 * self.dim {
            return Err(Error::DimensionMismatch { expected: 2 * self.dim, got: self.output.len() });
        }
        if !self.input.iter().chain(&self.output).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("model weights".into()));
        }
        Ok(())
    }

    pub fn features(&self, text: &str) -> Vec<u32> {
        let prepared = Prepared::new(text, &self.tokenizer);
        let mut out = Vec::new();
        push_features(&prepared, &self.vocab, self.tokenizer.ngram_order, self.bucket_count, &mut out);
        out
    }

    pub fn scorer(&self) -> NgramScorer<'_> {
        NgramScorer {
            model: self,
            feats: Vec::new(),
            hidden: vec![0.0; self.dim],
        }
    }

    /// `[P(negative), P(positive)]`.
    pub fn probabilities(&self, text: &str) -> [f32; 2] {
        self.scorer().probabilities(text)
    }

    /// Probability of the positive label.
    pub fn score(&self, text: &str) -> f32 {
        self.probabilities(text)[POSITIVE]
    }

    pub fn score_document(&self, doc: &Document) -> f32 {
        self.score(&doc.text)
    }
}

/// Reusable scratch buffers for scoring many documents.
pub struct NgramScorer<'m> {
    model: &'m NgramModel,
    feats: Vec<u32>,
    hidden: Vec<f32>,
}

impl NgramScorer<'_> {
    pub fn probabilities(&mut self, text: &str) -> [f32; 2] {
        let m = self.model;
        let prepared = Prepared::new(text, &m.tokenizer);
        self.feats.clear();
        push_features(&prepared, &m.vocab, m.tokenizer.ngram_order, m.bucket_count, &mut self.feats);
        mean_hidden(&m.input, m.dim, &self.feats, &mut self.hidden);
        softmax2(&m.output, &self.hidden)
    }

    pub fn score(&mut self, text: &str) -> f32 {
        self.probabilities(text)[POSITIVE]
    }
}

