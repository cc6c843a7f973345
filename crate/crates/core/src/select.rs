//! Turning scores into retained corpora: top-fraction planning, token-budget
//! retention, filtering and replay mixing.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashSet;
use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub scorer: String,
    pub config_hash: String,
    pub entries: Vec<ScoreEntry>,
}

impl ScoreTable {
    pub fn new(scorer: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self { scorer: scorer.into(), config_hash: config_hash.into(), entries: Vec::new() }
    }

    pub fn push(&mut self, id: impl Into<String>, score: f64) {
        self.entries.push(ScoreEntry { id: id.into(), score });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.entries.len());
        for e in &self.entries {
            if !e.score.is_finite() {
                return Err(Error::NonFinite(e.id.clone()));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::DuplicateId(e.id.clone()));
            }
        }
        Ok(())
    }
}

/// Ordering used to rank documents: score descending, then id ascending.
pub fn rank_order(a: &ScoreEntry, b: &ScoreEntry) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Equal scores are broken by ascending document id.
    ScoreDescIdAsc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPlan {
    pub fraction: f64,
    pub total: usize,
    pub threshold: f64,
    pub tie_policy: TiePolicy,
    pub scorer: String,
    pub config_hash: String,
    /// Retained ids in rank order.
    pub retained: Vec<String>,
}

impl SelectionPlan {
    pub fn retained_set(&self) -> HashSet<&str> {
        self.retained.iter().map(String::as_str).collect()
    }
}

/// `ceil(p · n)`, ignoring floating-point residue such as `0.15 · 10000 = 1500.0000000000002`.
pub fn retained_count(p: f64, n: usize) -> Result<usize> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidFraction(p));
    }
    let x = p * n as f64;
    let nearest = libm::round(x);
    let k = if (x - nearest).abs() <= 1e-9 * x.max(1.0) { nearest } else { libm::ceil(x) };
    Ok((k as usize).clamp(1, n))
}

/// Keep the top `ceil(p · N)` documents by (score desc, id asc).
pub fn plan_selection(scores: &ScoreTable, p: f64) -> Result<SelectionPlan> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    scores.validate()?;
    let k = retained_count(p, scores.len())?;
    let mut ranked: Vec<&ScoreEntry> = scores.entries.iter().collect();
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, |a, b| rank_order(a, b));
        ranked.truncate(k);
    }
    ranked.sort_unstable_by(|a, b| rank_order(a, b));
    Ok(SelectionPlan {
        fraction: p,
        total: scores.len(),
        threshold: ranked[k - 1].score,
        tie_policy: TiePolicy::ScoreDescIdAsc,
        scorer: scores.scorer.clone(),
        config_hash: scores.config_hash.clone(),
        retained: ranked.into_iter().map(|e| e.id.clone()).collect(),
    })
}

/// Monotone map from `f64` to `u64` consistent with `f64::total_cmp`.
fn order_key(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

const HIST_BITS: u32 = 16;

/// Two-pass selection for score streams too large to sort in memory.
///
/// `pass` must yield the same entries each time it is called. The first
/// pass builds a histogram over the high bits of each score's order key;
/// the second keeps everything above the boundary bucket and sorts only the
/// boundary bucket. Produces exactly the plan of [`plan_selection`].
pub fn plan_selection_two_pass<F, I>(mut pass: F, p: f64, scorer: &str, config_hash: &str) -> Result<SelectionPlan>
where
    F: FnMut() -> I,
    I: Iterator<Item = ScoreEntry>,
{
    let mut hist = alloc::vec![0usize; 1 << HIST_BITS];
    let mut n = 0usize;
    for e in pass() {
        if !e.score.is_finite() {
            return Err(Error::NonFinite(e.id));
        }
        hist[(order_key(e.score) >> (64 - HIST_BITS)) as usize] += 1;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyScores);
    }
    let k = retained_count(p, n)?;
    let mut above = 0usize;
    let mut boundary = 0usize;
    for b in (0..hist.len()).rev() {
        if above + hist[b] >= k {
            boundary = b;
            break;
        }
        above += hist[b];
    }
    let mut kept = Vec::with_capacity(k);
    let mut edge = Vec::new();
    for e in pass() {
        let b = (order_key(e.score) >> (64 - HIST_BITS)) as usize;
        match b.cmp(&boundary) {
            Ordering::Greater => kept.push(e),
            Ordering::Equal => edge.push(e),
            Ordering::Less => {}
        }
    }
    edge.sort_unstable_by(rank_order);
    edge.truncate(k - above);
    kept.extend(edge);
    kept.sort_unstable_by(rank_order);
    for w in kept.windows(2) {
        if w[0].id == w[1].id {
            return Err(Error::DuplicateId(w[0].id.clone()));
        }
    }
    Ok(SelectionPlan {
        fraction: p,
        total: n,
        threshold: kept[k - 1].score,
        tie_policy: TiePolicy::ScoreDescIdAsc,
        scorer: scorer.into(),
        config_hash: config_hash.into(),
        retained: kept.into_iter().map(|e| e.id).collect(),
    })
}

/// Retention fraction that yields a token budget, assuming tokens are spread
/// uniformly over documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetRetention {
    /// `target / total`, uncapped.
    pub raw: f64,
    /// Fraction to apply: `raw` clamped to `[min_fraction, 1]`.
    pub fraction: f64,
    /// `fraction` as a whole percentage, rounded half away from zero.
    pub percent: u32,
}

pub fn retention_for_budget(total_tokens: u64, target_tokens: u64) -> Result<BudgetRetention> {
    retention_for_budget_with_floor(total_tokens, target_tokens, 0.0)
}

/// Like [`retention_for_budget`], but never retains less than `min_fraction`
/// (e.g. a fixed top-10% recipe for corpora where the budget alone would
/// keep less).
pub fn retention_for_budget_with_floor(total_tokens: u64, target_tokens: u64, min_fraction: f64) -> Result<BudgetRetention> {
    if target_tokens == 0 {
        return Err(Error::NonPositiveBudget);
    }
    if total_tokens == 0 {
        return Err(Error::EmptyCorpus);
    }
    if !(0.0..=1.0).contains(&min_fraction) {
        return Err(Error::InvalidFraction(min_fraction));
    }
    let raw = target_tokens as f64 / total_tokens as f64;
    let fraction = raw.min(1.0).max(min_fraction);
    Ok(BudgetRetention { raw, fraction, percent: libm::round(fraction * 100.0) as u32 })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterStats {
    pub input_docs: usize,
    pub input_tokens: u64,
    pub retained_docs: usize,
    pub retained_tokens: u64,
    pub doc_fraction: f64,
    pub token_fraction: f64,
}

/// Streaming filter: feed documents in corpus order, then [`Filter::finish`].
pub struct Filter<'p> {
    plan: &'p SelectionPlan,
    retained: HashSet<&'p str>,
    found: HashSet<&'p str>,
    stats: FilterStats,
}

impl<'p> Filter<'p> {
    pub fn new(plan: &'p SelectionPlan) -> Self {
        Self { plan, retained: plan.retained_set(), found: HashSet::new(), stats: FilterStats::default() }
    }

    /// Whether `doc` is kept.
    pub fn accept(&mut self, doc: &Document) -> bool {
        let tokens = doc.ws_tokens() as u64;
        self.stats.input_docs += 1;
        self.stats.input_tokens += tokens;
        match self.retained.get(doc.id.as_str()) {
            Some(&id) => {
                self.found.insert(id);
                self.stats.retained_docs += 1;
                self.stats.retained_tokens += tokens;
                true
            }
            None => false,
        }
    }

    pub fn finish(mut self) -> Result<FilterStats> {
        if self.found.len() != self.retained.len() {
            let missing = self.plan.retained.iter().find(|id| !self.found.contains(id.as_str())).unwrap();
            return Err(Error::MissingDocument(missing.clone()));
        }
        let s = &mut self.stats;
        s.doc_fraction = ratio(s.retained_docs as f64, s.input_docs as f64);
        s.token_fraction = ratio(s.retained_tokens as f64, s.input_tokens as f64);
        Ok(self.stats)
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 { 0.0 } else { a / b }
}

pub fn filter_corpus<I>(docs: I, plan: &SelectionPlan) -> Result<(Vec<Document>, FilterStats)>
where
    I: IntoIterator<Item = Document>,
{
    let mut filter = Filter::new(plan);
    let kept = docs.into_iter().filter(|d| filter.accept(d)).collect();
    Ok((kept, filter.finish()?))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MixStats {
    pub total: usize,
    pub from_raw: usize,
    pub from_filtered: usize,
    /// Filtered documents left out to keep the requested proportion.
    pub dropped_filtered: usize,
    pub rate: f64,
    /// Replay proportions are by document count.
    pub basis: MixBasis,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixBasis {
    #[default]
    Documents,
}

fn raw_share(rate: f64, total: usize) -> usize {
    libm::round(rate * total as f64) as usize
}

/// Smallest output size `M` with `M - round(rate·M) == filtered`, and the raw share at that size.
pub fn mix_sizes(filtered: usize, rate: f64) -> (usize, usize) {
    let mut m = libm::floor(filtered as f64 / (1.0 - rate)) as usize;
    m = m.saturating_sub(2);
    while m - raw_share(rate, m) < filtered {
        m += 1;
    }
    while m > 0 && (m - 1) - raw_share(rate, m - 1) == filtered {
        m -= 1;
    }
    (m, raw_share(rate, m))
}

/// Mix seeded uniform samples of `raw` into `filtered` so that exactly
/// `round(rate · M)` of the `M` output documents are replayed.
///
/// Replayed documents carry `meta.replay = "true"`; ones whose id collides
/// with a filtered document are renamed `replay:<id>`. Output order is a
/// seeded shuffle.
pub fn mix_replay(filtered: Vec<Document>, raw: &[Document], rate: f64, seed: u64) -> Result<(Vec<Document>, MixStats)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidReplayRate(rate));
    }
    let n_filtered = filtered.len();
    if rate == 0.0 {
        return Ok((
            filtered,
            MixStats { total: n_filtered, from_filtered: n_filtered, ..MixStats::default() },
        ));
    }
    if raw.is_empty() {
        return Err(Error::InsufficientReplay { needed: 1, available: 0 });
    }
    let mut keep = n_filtered;
    let (mut total, mut from_raw) = mix_sizes(keep, rate);
    while from_raw > raw.len() {
        keep -= 1;
        (total, from_raw) = mix_sizes(keep, rate);
    }

    let mut out = filtered;
    out.truncate(keep);
    let taken: HashSet<String> = out.iter().map(|d| d.id.clone()).collect();
    let mut r = rng::derived(seed, "replay-sample");
    for i in rng::sample_indices(&mut r, raw.len(), from_raw) {
        let mut d = raw[i].clone();
        if taken.contains(&d.id) {
            d.id = format!("replay:{}", d.id);
        }
        d.meta.insert("replay".into(), "true".into());
        out.push(d);
    }
    let mut r = rng::derived(seed, "replay-order");
    let order = rng::shuffled_indices(&mut r, out.len());
    let mut slots: Vec<Option<Document>> = out.into_iter().map(Some).collect();
    let mixed = order.into_iter().map(|i| slots[i].take().unwrap()).collect();
    Ok((
        mixed,
        MixStats {
            total,
            from_raw,
            from_filtered: keep,
            dropped_filtered: n_filtered - keep,
            rate,
            basis: MixBasis::Documents,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn table(scores: &[(&str, f64)]) -> ScoreTable {
        let mut t = ScoreTable::new("test", "h");
        for (id, s) in scores {
            t.push(*id, *s);
        }
        t
    }

    #[test]
    fn top_ten_percent_of_ten() {
        let t = table(&[("a", 0.1), ("b", 0.9), ("c", 0.3), ("d", 0.2), ("e", 0.5), ("f", 0.4), ("g", 0.6), ("h", 0.0), ("i", 0.7), ("j", 0.8)]);
        let plan = plan_selection(&t, 0.10).unwrap();
        assert_eq!(plan.retained, vec!["b"]);
        assert_eq!(plan.threshold, 0.9);
        let all = plan_selection(&t, 1.0).unwrap();
        assert_eq!(all.retained.len(), 10);
        assert_eq!(all.threshold, 0.0);
    }

    #[test]
    fn ties_break_by_id() {
        let t = table(&[("d", 0.5), ("b", 0.5), ("c", 0.5), ("a", 0.5)]);
        assert_eq!(plan_selection(&t, 0.5).unwrap().retained, vec!["a", "b"]);
    }

    #[test]
    fn errors() {
        assert_eq!(plan_selection(&ScoreTable::default(), 0.1).unwrap_err(), Error::EmptyScores);
        let t = table(&[("a", 1.0)]);
        assert_eq!(plan_selection(&t, 0.0).unwrap_err(), Error::InvalidFraction(0.0));
        assert_eq!(plan_selection(&t, 1.5).unwrap_err(), Error::InvalidFraction(1.5));
        assert!(plan_selection(&table(&[("a", 1.0), ("a", 2.0)]), 0.5).is_err());
        assert!(plan_selection(&table(&[("a", f64::NAN)]), 0.5).is_err());
    }

    #[test]
    fn counts_ignore_float_residue() {
        assert_eq!(retained_count(0.15, 10_000).unwrap(), 1500);
        assert_eq!(retained_count(0.1, 10).unwrap(), 1);
        assert_eq!(retained_count(0.1, 11).unwrap(), 2);
        assert_eq!(retained_count(0.001, 10).unwrap(), 1);
    }

    #[test]
    fn budget() {
        let r = retention_for_budget(108, 70).unwrap();
        assert!((r.raw - 0.6481).abs() < 1e-4);
        assert_eq!(r.percent, 65);
        assert_eq!(retention_for_budget(1000, 100).unwrap().fraction, 0.1);
        assert_eq!(retention_for_budget(100, 500).unwrap().fraction, 1.0);
        assert_eq!(retention_for_budget(100, 0).unwrap_err(), Error::NonPositiveBudget);
        assert_eq!(retention_for_budget(0, 5).unwrap_err(), Error::EmptyCorpus);
        assert_eq!(retention_for_budget_with_floor(1597, 70, 0.10).unwrap().percent, 10);
    }

    fn docs(ids: &[&str]) -> Vec<Document> {
        ids.iter().map(|id| Document::new(*id, "eng_Latn", "one two")).collect()
    }

    #[test]
    fn filter_keeps_order_and_reports() {
        let plan = plan_selection(&table(&[("d1", 0.1), ("d2", 0.9), ("d3", 0.2)]), 0.3).unwrap();
        let (kept, stats) = filter_corpus(docs(&["d1", "d2", "d3"]), &plan).unwrap();
        assert_eq!(kept.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), vec!["d2"]);
        assert_eq!(stats.retained_tokens, 2);
        assert_eq!(stats.input_tokens, 6);
        let missing = filter_corpus(docs(&["d1", "d3"]), &plan).unwrap_err();
        assert_eq!(missing, Error::MissingDocument("d2".into()));
    }

    #[test]
    fn mix_proportions() {
        assert_eq!(mix_sizes(950, 0.05), (1000, 50));
        assert_eq!(mix_sizes(900, 0.10), (1000, 100));
        assert_eq!(mix_sizes(1, 0.5), (2, 1));
        assert_eq!(mix_sizes(0, 0.3), (0, 0));
    }

    #[test]
    fn mix_replay_basic() {
        let filtered: Vec<Document> = (0..950).map(|i| Document::new(alloc::format!("f{i}"), "x", "t")).collect();
        let raw: Vec<Document> = (0..5000).map(|i| Document::new(alloc::format!("r{i}"), "x", "t")).collect();
        let (out, stats) = mix_replay(filtered.clone(), &raw, 0.05, 1).unwrap();
        assert_eq!(out.len(), 1000);
        assert_eq!(stats.from_raw, 50);
        assert_eq!(out.iter().filter(|d| d.meta.contains_key("replay")).count(), 50);
        let (again, _) = mix_replay(filtered.clone(), &raw, 0.05, 1).unwrap();
        assert_eq!(out, again);
        let (same, _) = mix_replay(filtered.clone(), &raw, 0.0, 1).unwrap();
        assert_eq!(same, filtered);
        assert!(mix_replay(filtered.clone(), &[], 0.1, 1).is_err());
        assert!(mix_replay(filtered, &raw, 1.0, 1).is_err());
    }

    #[test]
    fn mix_truncates_filtered_when_raw_is_short() {
        let filtered: Vec<Document> = (0..100).map(|i| Document::new(alloc::format!("f{i}"), "x", "t")).collect();
        let raw: Vec<Document> = (0..5).map(|i| Document::new(alloc::format!("r{i}"), "x", "t")).collect();
        let (out, stats) = mix_replay(filtered, &raw, 0.10, 3).unwrap();
        assert_eq!(stats.from_raw, 5);
        assert_eq!(out.len(), stats.total);
        assert_eq!(raw_share(0.10, stats.total), 5);
        assert!(stats.dropped_filtered > 0);
    }

    #[test]
    fn colliding_replay_ids_are_renamed() {
        let filtered = docs(&["a"]);
        let raw = docs(&["a"]);
        let (out, _) = mix_replay(filtered, &raw, 0.5, 0).unwrap();
        let mut ids: Vec<_> = out.iter().map(|d| d.id.clone()).collect();
        ids.sort();
        assert_eq!(ids, vec!["a", "replay:a"]);
    }
}
