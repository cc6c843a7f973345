//! Max-cosine-similarity scoring against a sampled set of positive embeddings.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::mlp::dot;
use crate::rng;

pub const DEFAULT_K: usize = 8192;

/// Score given to documents whose embedding has zero norm.
pub const ZERO_NORM_SCORE: f32 = -1.0;

/// Unit-norm reference embeddings, one row per sampled positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    pub dim: usize,
    pub ids: Vec<String>,
    pub vectors: Vec<f32>,
    pub requested_k: usize,
    pub seed: u64,
    /// Zero-norm candidates passed over while sampling.
    pub skipped_zero_norm: usize,
}

fn norm(v: &[f32]) -> f64 {
    libm::sqrt(v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>())
}

impl ReferenceSet {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn from_normalized(dim: usize, ids: Vec<String>, vectors: Vec<f32>, requested_k: usize, seed: u64) -> Result<Self> {
        if vectors.len() != ids.len() * dim {
            return Err(Error::DimensionMismatch { expected: ids.len() * dim, got: vectors.len() });
        }
        Ok(Self { dim, ids, vectors, requested_k, seed, skipped_zero_norm: 0 })
    }

    /// Max cosine similarity of `doc` to any reference, or `None` for a zero-norm `doc`.
    pub fn score_row(&self, doc: &[f32]) -> Option<f32> {
        let mut out = [0.0f32];
        let flags = self.score_block(&[doc], &mut out);
        (!flags[0]).then_some(out[0])
    }

    /// Scores a block of documents in one pass over the references so each
    /// reference row is reused from cache. Returns per-document zero-norm
    /// flags; flagged documents get [`ZERO_NORM_SCORE`].
    pub fn score_block(&self, docs: &[&[f32]], out: &mut [f32]) -> Vec<bool> {
        let inv: Vec<f32> = docs
            .iter()
            .map(|d| {
                let n = norm(d);
                if n > 0.0 { (1.0 / n) as f32 } else { 0.0 }
            })
            .collect();
        let mut best = alloc::vec![f32::NEG_INFINITY; docs.len()];
        for r in 0..self.len() {
            let reference = self.row(r);
            for (b, d) in best.iter_mut().zip(docs) {
                let s = dot(reference, d);
                if s > *b {
                    *b = s;
                }
            }
        }
        let mut flags = Vec::with_capacity(docs.len());
        for i in 0..docs.len() {
            let zero = inv[i] == 0.0;
            out[i] = if zero { ZERO_NORM_SCORE } else { best[i] * inv[i] };
            flags.push(zero);
        }
        flags
    }
}

/// Sample `min(k, n)` non-zero rows without replacement (seeded) and
/// L2-normalize them.
pub fn build_reference_set(positives: &EmbeddingMatrix, k: usize, seed: u64) -> Result<ReferenceSet> {
    let dim = positives.dim();
    if positives.is_empty() {
        return Err(Error::AllZeroNorm);
    }
    let mut r = rng::derived(seed, "cosine-refs");
    let order = rng::shuffled_indices(&mut r, positives.len());
    let mut set = ReferenceSet {
        dim,
        ids: Vec::new(),
        vectors: Vec::new(),
        requested_k: k,
        seed,
        skipped_zero_norm: 0,
    };
    for i in order {
        if set.ids.len() == k {
            break;
        }
        let row = positives.row(i);
        let n = norm(row);
        if n == 0.0 {
            set.skipped_zero_norm += 1;
            continue;
        }
        set.ids.push(positives.ids()[i].clone());
        set.vectors.extend(row.iter().map(|&x| (f64::from(x) / n) as f32));
    }
    if set.is_empty() {
        return Err(Error::AllZeroNorm);
    }
    Ok(set)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CosineScores {
    pub scores: Vec<f32>,
    /// Documents whose zero-norm embedding was scored [`ZERO_NORM_SCORE`].
    pub zero_norm_ids: Vec<String>,
}

pub const BLOCK: usize = 16;

pub fn score_cosine(refs: &ReferenceSet, matrix: &EmbeddingMatrix) -> Result<CosineScores> {
    if matrix.dim() != refs.dim {
        return Err(Error::DimensionMismatch { expected: refs.dim, got: matrix.dim() });
    }
    let mut out = CosineScores { scores: alloc::vec![0.0; matrix.len()], zero_norm_ids: Vec::new() };
    let mut start = 0;
    while start < matrix.len() {
        let end = (start + BLOCK).min(matrix.len());
        let rows: Vec<&[f32]> = (start..end).map(|i| matrix.row(i)).collect();
        let flags = refs.score_block(&rows, &mut out.scores[start..end]);
        for (j, zero) in flags.into_iter().enumerate() {
            if zero {
                out.zero_norm_ids.push(matrix.ids()[start + j].clone());
            }
        }
        start = end;
    }
    Ok(out)
}
