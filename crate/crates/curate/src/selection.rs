//! Plans, filtering and replay mixing over document files.

use std::path::{Path, PathBuf};

use curate_core::select::{
    mix_replay, plan_selection, retention_for_budget_with_floor, BudgetRetention, Filter, FilterStats, MixStats,
    ScoreTable, SelectionPlan,
};
use serde::{Deserialize, Serialize};

use crate::corpus::{load_documents, read_documents, scan_manifest, CorpusManifest, DocumentWriter};
use crate::error::{Error, Result};

/// How much of a corpus to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retention {
    /// Fraction of documents.
    Fraction(f64),
    /// Token budget, converted to a document fraction assuming uniform
    /// token spread, never below `min_fraction`.
    Budget { target_tokens: u64, #[serde(default)] min_fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub plan: SelectionPlan,
    pub budget: Option<BudgetRetention>,
}

/// Resolves `retention` against the corpus and plans the selection. The
/// score table must cover the corpus exactly.
pub fn plan_for_corpus(scores: &ScoreTable, retention: Retention, corpus: &[PathBuf]) -> Result<PlanReport> {
    let (fraction, budget) = match retention {
        Retention::Fraction(p) => (p, None),
        Retention::Budget { target_tokens, min_fraction } => {
            let manifest = scan_manifest(corpus)?;
            let b = retention_for_budget_with_floor(manifest.total_ws_tokens, target_tokens, min_fraction)?;
            (b.fraction, Some(b))
        }
    };
    Ok(PlanReport { plan: plan_selection(scores, fraction)?, budget })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub stats: FilterStats,
    pub manifest: CorpusManifest,
}

/// Streams `inputs` in order, writing the documents the plan retains.
pub fn filter_files(inputs: &[PathBuf], plan: &SelectionPlan, output: &Path) -> Result<FilterReport> {
    let mut filter = Filter::new(plan);
    let mut w = DocumentWriter::create(output)?;
    for p in inputs {
        for d in read_documents(p)? {
            let d = d?;
            if filter.accept(&d) {
                w.write(&d)?;
            }
        }
    }
    let stats = filter.finish()?;
    Ok(FilterReport { stats, manifest: w.finish()? })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixReport {
    pub stats: MixStats,
    pub manifest: CorpusManifest,
}

pub fn mix_files(filtered: &Path, raw: &[PathBuf], rate: f64, seed: u64, output: &Path) -> Result<MixReport> {
    let filtered = load_documents(filtered)?;
    let mut raw_docs = Vec::new();
    for p in raw {
        raw_docs.extend(load_documents(p)?);
    }
    if rate > 0.0 && raw_docs.is_empty() {
        return Err(Error::Data("replay needs a non-empty raw corpus".into()));
    }
    let (mixed, stats) = mix_replay(filtered, &raw_docs, rate, seed)?;
    let mut w = DocumentWriter::create(output)?;
    for d in &mixed {
        w.write(d)?;
    }
    Ok(MixReport { stats, manifest: w.finish()? })
}
