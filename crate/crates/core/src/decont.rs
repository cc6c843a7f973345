//! Benchmark n-gram decontamination with whole-document removal.
//!
//! Text is normalized (NFC, lowercase, Unicode punctuation and symbols
//! removed, whitespace split) and every window of `n` consecutive tokens is
//! fingerprinted with FNV-1a 64 over the tokens joined by U+241F. A document
//! sharing any fingerprint with the benchmark index is dropped in full.
//!
//! 64-bit fingerprints can collide; with `m` index grams and `w` scanned
//! windows the expected number of false hits is about `m·w / 2^64`, which
//! is below 1e-6 even for 10^6 grams against 10^7 windows.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;
use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

use crate::document::Document;
use crate::error::{Error, Result};
use crate::fnv::{fnv1a64, SEPARATOR};

pub const DEFAULT_N: usize = 13;

/// Identifies the normalization rules. Indexes built under a different tag
/// are rejected.
pub const NORMALIZATION_TAG: &str = "nfc-lower-strip-PS-ws.v1";

/// At most this many benchmarks per index (one bit each in the source mask).
pub const MAX_BENCHMARKS: usize = 64;

fn is_punct_or_symbol(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
    )
}

/// Normalized text with tokens joined by U+241F, so every n-token window is
/// one contiguous byte range.
#[derive(Debug, Clone)]
pub struct NormalizedText {
    joined: String,
    /// Byte offset of each token start; one extra entry marks the end (+ separator width).
    starts: Vec<usize>,
}

const SEP_LEN: usize = 3;

impl NormalizedText {
    pub fn new(text: &str) -> Self {
        let mut joined = String::with_capacity(text.len());
        let mut starts = Vec::new();
        let mut in_token = false;
        for c in text.nfc().flat_map(char::to_lowercase) {
            if c.is_whitespace() {
                in_token = false;
                continue;
            }
            if is_punct_or_symbol(c) {
                continue;
            }
            if !in_token {
                if !starts.is_empty() {
                    joined.push(SEPARATOR);
                }
                starts.push(joined.len());
                in_token = true;
            }
            joined.push(c);
        }
        starts.push(joined.len() + SEP_LEN);
        Self { joined, starts }
    }

    pub fn len(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn token(&self, i: usize) -> &str {
        &self.joined[self.starts[i]..self.starts[i + 1] - SEP_LEN]
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        (0..self.len()).map(|i| self.token(i))
    }

    /// Tokens `start..start + n` joined by the separator.
    pub fn window(&self, start: usize, n: usize) -> &str {
        &self.joined[self.starts[start]..self.starts[start + n] - SEP_LEN]
    }

    /// Fingerprints of every `n`-token window, in order.
    pub fn window_fingerprints(&self, n: usize) -> impl Iterator<Item = u64> + '_ {
        let count = if n == 0 || self.len() < n { 0 } else { self.len() - n + 1 };
        (0..count).map(move |s| fnv1a64(self.window(s, n).as_bytes()))
    }
}

pub fn normalize_for_ngrams(text: &str) -> Vec<String> {
    NormalizedText::new(text).tokens().map(String::from).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramIndex {
    pub n: usize,
    pub normalization: String,
    pub benchmarks: Vec<String>,
    /// Fingerprint → bitmask over `benchmarks`.
    grams: HashMap<u64, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexBuildReport {
    pub texts: usize,
    /// Texts shorter than `n` tokens, which contribute nothing.
    pub short_texts: usize,
    pub grams: usize,
}

impl NgramIndex {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidConfig(alloc::format!("n-gram size {n} must be >= 2")));
        }
        Ok(Self { n, normalization: NORMALIZATION_TAG.into(), benchmarks: Vec::new(), grams: HashMap::new() })
    }

    /// Rebuild from stored parts, e.g. a decoded index file.
    pub fn from_parts(n: usize, normalization: String, benchmarks: Vec<String>, grams: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let mut idx = Self::new(n)?;
        idx.normalization = normalization;
        idx.benchmarks = benchmarks;
        idx.grams = grams.into_iter().collect();
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    /// `(fingerprint, benchmark mask)` sorted by fingerprint.
    pub fn sorted_grams(&self) -> Vec<(u64, u64)> {
        let mut v: Vec<(u64, u64)> = self.grams.iter().map(|(&g, &m)| (g, m)).collect();
        v.sort_unstable();
        v
    }

    pub fn contains(&self, fingerprint: u64) -> bool {
        self.grams.contains_key(&fingerprint)
    }

    fn benchmark_bit(&mut self, name: &str) -> Result<u64> {
        let pos = match self.benchmarks.iter().position(|b| b == name) {
            Some(p) => p,
            None => {
                if self.benchmarks.len() == MAX_BENCHMARKS {
                    return Err(Error::InvalidConfig(alloc::format!("more than {MAX_BENCHMARKS} benchmarks")));
                }
                self.benchmarks.push(name.into());
                self.benchmarks.len() - 1
            }
        };
        Ok(1 << pos)
    }

    /// Adds every `n`-gram of `text`; returns how many windows it had.
    pub fn add_text(&mut self, benchmark: &str, text: &str) -> Result<usize> {
        let bit = self.benchmark_bit(benchmark)?;
        let norm = NormalizedText::new(text);
        let mut windows = 0;
        for g in norm.window_fingerprints(self.n) {
            *self.grams.entry(g).or_insert(0) |= bit;
            windows += 1;
        }
        Ok(windows)
    }

    pub fn check_normalization(&self) -> Result<()> {
        if self.normalization != NORMALIZATION_TAG {
            return Err(Error::NormalizationMismatch {
                expected: NORMALIZATION_TAG.into(),
                found: self.normalization.clone(),
            });
        }
        Ok(())
    }

    /// First matching window of `text`: `(window start, fingerprint, benchmark mask)`.
    pub fn first_hit(&self, text: &NormalizedText) -> Option<(usize, u64, u64)> {
        text.window_fingerprints(self.n)
            .enumerate()
            .find_map(|(i, g)| self.grams.get(&g).map(|&m| (i, g, m)))
    }

    /// Union of benchmark masks over every matching window.
    pub fn hit_mask(&self, text: &NormalizedText) -> u64 {
        text.window_fingerprints(self.n).filter_map(|g| self.grams.get(&g)).fold(0, |a, &m| a | m)
    }
}

/// Build an index from `(benchmark name, text)` pairs.
pub fn build_index<'a, I>(texts: I, n: usize) -> Result<(NgramIndex, IndexBuildReport)>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let mut index = NgramIndex::new(n)?;
    let mut report = IndexBuildReport::default();
    for (bench, text) in texts {
        report.texts += 1;
        if index.add_text(bench, text)? == 0 {
            report.short_texts += 1;
        }
    }
    if index.is_empty() {
        return Err(Error::EmptyIndex(n));
    }
    report.grams = index.len();
    Ok((index, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSample {
    pub doc_id: String,
    /// The first matching window, tokens separated by spaces.
    pub gram: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecontReport {
    pub n: usize,
    pub normalization: String,
    pub total_docs: usize,
    pub removed_docs: usize,
    pub contamination_rate: f64,
    /// Removed documents per benchmark (a document can count for several).
    pub per_benchmark: BTreeMap<String, usize>,
    pub samples: Vec<ContaminationSample>,
}

pub const MAX_SAMPLES: usize = 20;

/// Streaming scanner; counters are plain sums so per-shard scanners merge
/// deterministically with [`DecontReport::merge`].
pub struct Decontaminator<'i> {
    index: &'i NgramIndex,
    report: DecontReport,
}

impl<'i> Decontaminator<'i> {
    pub fn new(index: &'i NgramIndex) -> Result<Self> {
        index.check_normalization()?;
        if index.is_empty() {
            return Err(Error::EmptyIndex(index.n));
        }
        let report = DecontReport {
            n: index.n,
            normalization: index.normalization.clone(),
            per_benchmark: index.benchmarks.iter().map(|b| (b.clone(), 0)).collect(),
            ..DecontReport::default()
        };
        Ok(Self { index, report })
    }

    /// Whether `doc` is clean (kept).
    pub fn keep(&mut self, doc: &Document) -> bool {
        self.report.total_docs += 1;
        let norm = NormalizedText::new(&doc.text);
        let Some((start, _, _)) = self.index.first_hit(&norm) else {
            return true;
        };
        self.report.removed_docs += 1;
        let mask = self.index.hit_mask(&norm);
        for (i, b) in self.index.benchmarks.iter().enumerate() {
            if mask & (1 << i) != 0 {
                *self.report.per_benchmark.get_mut(b).unwrap() += 1;
            }
        }
        if self.report.samples.len() < MAX_SAMPLES {
            self.report.samples.push(ContaminationSample {
                doc_id: doc.id.clone(),
                gram: norm.window(start, self.index.n).replace(SEPARATOR, " "),
            });
        }
        false
    }

    pub fn finish(mut self) -> DecontReport {
        self.report.finalize();
        self.report
    }
}

impl DecontReport {
    fn finalize(&mut self) {
        self.contamination_rate = if self.total_docs == 0 {
            0.0
        } else {
            self.removed_docs as f64 / self.total_docs as f64
        };
    }

    /// Combine shard reports in shard order.
    pub fn merge(&mut self, other: DecontReport) {
        self.total_docs += other.total_docs;
        self.removed_docs += other.removed_docs;
        for (b, c) in other.per_benchmark {
            *self.per_benchmark.entry(b).or_insert(0) += c;
        }
        for s in other.samples {
            if self.samples.len() < MAX_SAMPLES {
                self.samples.push(s);
            }
        }
        self.finalize();
    }
}

pub fn decontaminate<I>(docs: I, index: &NgramIndex) -> Result<(Vec<Document>, DecontReport)>
where
    I: IntoIterator<Item = Document>,
{
    let mut d = Decontaminator::new(index)?;
    let clean = docs.into_iter().filter(|doc| d.keep(doc)).collect();
    Ok((clean, d.finish()))
}
