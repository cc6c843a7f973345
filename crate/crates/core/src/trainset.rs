//! Binary classifier training sets: positive-sample pre-processing,
//! seeded class sampling and the held-out split.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "positive" | "1" | "pos" => Some(Label::Positive),
            "negative" | "0" | "neg" => Some(Label::Negative),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub source: String,
}

impl LabeledSample {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label, source: impl Into<String>) -> Self {
        Self { id: id.into(), text: text.into(), label, source: source.into() }
    }
}

/// Token whose presence marks a sample as corrupted.
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// No non-empty text component.
    NoText,
    ContainsUnk,
    /// Contains U+FFFD, i.e. the source had undecodable bytes.
    BadEncoding,
}

impl Rejection {
    pub fn as_str(self) -> &'static str {
        match self {
            Rejection::NoText => "no_text",
            Rejection::ContainsUnk => "contains_unk",
            Rejection::BadEncoding => "bad_encoding",
        }
    }
}

/// Joins the non-empty components of a positive record in the given order
/// with single newlines, rejecting samples that contain `<unk>` or the
/// Unicode replacement character.
pub fn preprocess_positive<S: AsRef<str>>(
    id: &str,
    components: &[S],
    source: &str,
) -> Result<LabeledSample, Rejection> {
    let mut text = String::new();
    for c in components.iter().map(AsRef::as_ref).filter(|c| !c.is_empty()) {
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(c);
    }
    if text.trim().is_empty() {
        return Err(Rejection::NoText);
    }
    if text.contains(UNK_TOKEN) {
        return Err(Rejection::ContainsUnk);
    }
    if text.contains('\u{FFFD}') {
        return Err(Rejection::BadEncoding);
    }
    Ok(LabeledSample::new(id, text, Label::Positive, source))
}

/// Fraction of each class held out for evaluation.
pub const HELDOUT_FRACTION: f64 = 0.05;

/// Uniformly pick `min(cap, items.len())` items without replacement,
/// keeping their input order.
pub fn sample_capped<T: Clone>(items: &[T], cap: usize, seed: u64, stream: &str) -> Vec<T> {
    let mut r = rng::derived(seed, stream);
    rng::sample_indices(&mut r, items.len(), cap)
        .into_iter()
        .map(|i| items[i].clone())
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<LabeledSample>,
    pub heldout: Vec<LabeledSample>,
}

/// Hold out `floor(HELDOUT_FRACTION · n)` of each class (seeded), then
/// return both parts in input order.
pub fn split_heldout(positives: Vec<LabeledSample>, negatives: Vec<LabeledSample>, seed: u64) -> Result<Split> {
    {
        let mut seen = hashbrown::HashMap::<&str, Label>::new();
        for s in positives.iter().chain(&negatives) {
            if let Some(prev) = seen.insert(&s.id, s.label) {
                if prev != s.label {
                    return Err(Error::LabelConflict(s.id.clone()));
                }
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
    }
    let mut split = Split::default();
    for (class, stream) in [(positives, "heldout-positive"), (negatives, "heldout-negative")] {
        let n_held = libm::floor(class.len() as f64 * HELDOUT_FRACTION) as usize;
        let mut r = rng::derived(seed, stream);
        let held = rng::sample_indices(&mut r, class.len(), n_held);
        let mut next = held.iter().peekable();
        for (i, s) in class.into_iter().enumerate() {
            if next.peek() == Some(&&i) {
                next.next();
                split.heldout.push(s);
            } else {
                split.train.push(s);
            }
        }
    }
    Ok(split)
}

/// Per-source pre-processing and sampling counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceReport {
    pub name: String,
    pub candidates: usize,
    pub rejected_no_text: usize,
    pub rejected_unk: usize,
    pub rejected_encoding: usize,
    pub survivors: usize,
    pub sampled: usize,
}

impl SourceReport {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), ..Self::default() }
    }

    pub fn record(&mut self, outcome: &Result<LabeledSample, Rejection>) {
        self.candidates += 1;
        match outcome {
            Ok(_) => self.survivors += 1,
            Err(Rejection::NoText) => self.rejected_no_text += 1,
            Err(Rejection::ContainsUnk) => self.rejected_unk += 1,
            Err(Rejection::BadEncoding) => self.rejected_encoding += 1,
        }
    }

    pub fn rejected(&self) -> usize {
        self.rejected_no_text + self.rejected_unk + self.rejected_encoding
    }

    pub fn rejection_rate(&self) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            self.rejected() as f64 / self.candidates as f64
        }
    }
}
