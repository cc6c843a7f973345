use alloc::string::String;
use alloc::vec::Vec;

use hashbrown::HashMap;

use super::tokenize::Prepared;
use crate::fnv::{Fnv1a64, SEPARATOR};

/// Word vocabulary: tokens meeting the minimum count, most frequent first
/// (ties by byte order).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn build<'a, I>(tokens: I, min_count: u32) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut freq: HashMap<&'a str, u64> = HashMap::new();
        for t in tokens {
            *freq.entry(t).or_insert(0) += 1;
        }
        let mut kept: Vec<(&str, u64)> = freq
            .into_iter()
            .filter(|&(_, c)| c >= u64::from(min_count))
            .collect();
        kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Self::from_entries(kept.into_iter().map(|(w, c)| (String::from(w), c)))
    }

    /// Rebuild from `(word, count)` pairs in index order.
    pub fn from_entries(entries: impl IntoIterator<Item = (String, u64)>) -> Self {
        let mut v = Self::default();
        for (w, c) in entries {
            v.index.insert(w.clone(), v.words.len() as u32);
            v.words.push(w);
            v.counts.push(c);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    #[inline]
    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words.iter().map(String::as_str).zip(self.counts.iter().copied())
    }
}

pub(crate) trait TokenSeq {
    fn count(&self) -> usize;
    fn at(&self, i: usize) -> &str;
}

impl TokenSeq for Prepared<'_> {
    fn count(&self) -> usize {
        self.len()
    }
    fn at(&self, i: usize) -> &str {
        self.token(i)
    }
}

impl<S: AsRef<str>> TokenSeq for [S] {
    fn count(&self) -> usize {
        self.len()
    }
    fn at(&self, i: usize) -> &str {
        self[i].as_ref()
    }
}

pub(crate) fn push_features<T: TokenSeq + ?Sized>(
    tokens: &T,
    vocab: &Vocab,
    order: usize,
    bucket_count: u32,
    out: &mut Vec<u32>,
) {
    let n = tokens.count();
    for i in 0..n {
        if let Some(idx) = vocab.get(tokens.at(i)) {
            out.push(idx);
        }
    }
    if bucket_count == 0 {
        return;
    }
    let base = vocab.len() as u32;
    let mut sep = [0u8; 4];
    let sep = SEPARATOR.encode_utf8(&mut sep).as_bytes();
    for width in 2..=order {
        if width > n {
            break;
        }
        for start in 0..=n - width {
            let mut h = Fnv1a64::default();
            h.write(tokens.at(start).as_bytes());
            for j in start + 1..start + width {
                h.write(sep);
                h.write(tokens.at(j).as_bytes());
            }
            out.push(base + (h.finish() % u64::from(bucket_count)) as u32);
        }
    }
}

/// Feature indices for a token sequence: in-vocabulary unigram indices in
/// token order, then hashed n-gram buckets for orders 2 through `order`
/// (offset by the vocabulary size). Duplicates are kept.
pub fn featurize<S: AsRef<str>>(tokens: &[S], vocab: &Vocab, order: usize, bucket_count: u32) -> Vec<u32> {
    let mut out = Vec::new();
    push_features(tokens, vocab, order, bucket_count, &mut out);
    out
}
