//! In-memory per-document embedding matrix and id alignment.

use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row `i` of `data` (length `dim`) belongs to `ids[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
}

pub const DEFAULT_DIM: usize = 768;

impl EmbeddingMatrix {
    pub fn new(dim: usize) -> Self {
        Self { dim, ids: Vec::new(), data: Vec::new() }
    }

    pub fn from_parts(dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if data.len() != ids.len() * dim {
            return Err(Error::DimensionMismatch { expected: ids.len() * dim, got: data.len() });
        }
        let mut m = Self::new(dim);
        m.ids.reserve(ids.len());
        m.data.reserve(data.len());
        for (id, row) in ids.into_iter().zip(data.chunks_exact(dim.max(1))) {
            m.push(id, row)?;
        }
        Ok(m)
    }

    /// Append a row, checking dimension and finiteness. Ids must be unique;
    /// uniqueness is checked by [`EmbeddingMatrix::validate`].
    pub fn push(&mut self, id: String, row: &[f32]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: row.len() });
        }
        if !row.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(id));
        }
        self.ids.push(id);
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.ids.len());
        for id in &self.ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for (id, row) in self.iter() {
            if !row.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(id.into()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids.iter().map(String::as_str).zip(self.data.chunks_exact(self.dim.max(1)))
    }

    pub fn index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }
}

/// Ids present on one side only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentReport {
    /// Documents without an embedding, in document order.
    pub missing: Vec<String>,
    /// Embedding rows without a document, in row order.
    pub orphans: Vec<String>,
}

impl AlignmentReport {
    pub fn is_aligned(&self) -> bool {
        self.missing.is_empty() && self.orphans.is_empty()
    }
}

pub fn align<'a, I>(matrix: &EmbeddingMatrix, doc_ids: I) -> AlignmentReport
where
    I: IntoIterator<Item = &'a str>,
{
    let rows: HashSet<&str> = matrix.ids.iter().map(String::as_str).collect();
    let mut docs = HashSet::new();
    let mut report = AlignmentReport::default();
    for id in doc_ids {
        if !rows.contains(id) {
            report.missing.push(id.into());
        }
        docs.insert(id);
    }
    report.orphans = matrix
        .ids
        .iter()
        .filter(|id| !docs.contains(id.as_str()))
        .cloned()
        .collect();
    report
}
