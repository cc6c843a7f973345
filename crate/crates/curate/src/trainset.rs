//! Classifier training sets from positive record files and a negative corpus.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use curate_core::rng;
use curate_core::trainset::{preprocess_positive, sample_capped, split_heldout, Label, LabeledSample, SourceReport};
use curate_core::Document;
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{read_documents, write_json, DocumentWriter};
use crate::error::{Error, Result};

pub const DEFAULT_CAP: usize = 80_000;
pub const LABEL_KEY: &str = "label";
pub const SOURCE_KEY: &str = "source";
pub const NEGATIVE_SOURCE: &str = "corpus";

/// A positive dataset: one JSON record per line, text taken from `fields`
/// in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositiveSource {
    pub name: String,
    pub path: PathBuf,
    pub fields: Vec<String>,
    /// Record key holding the sample id; the 1-based line number is used
    /// when absent.
    #[serde(default = "default_id_field")]
    pub id_field: String,
}

fn default_id_field() -> String {
    "id".into()
}

fn default_cap() -> usize {
    DEFAULT_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainsetSpec {
    pub lang: String,
    pub positive_sources: Vec<PositiveSource>,
    pub negative_corpus: PathBuf,
    #[serde(default = "default_cap")]
    pub cap_per_class: usize,
    pub seed: u64,
}

impl TrainsetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.positive_sources.is_empty() {
            return Err(Error::Config("trainset needs at least one positive source".into()));
        }
        if self.cap_per_class == 0 {
            return Err(Error::Config("cap_per_class must be positive".into()));
        }
        for s in &self.positive_sources {
            if s.fields.is_empty() {
                return Err(Error::Config(format!("positive source {:?} lists no fields", s.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    #[serde(flatten)]
    pub counts: SourceReport,
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainsetReport {
    pub lang: String,
    pub seed: u64,
    pub cap_per_class: usize,
    pub sources: Vec<SourceSummary>,
    pub positive_survivors: usize,
    pub positives: usize,
    pub negative_candidates: usize,
    /// Negative-corpus documents whose `lang` differs from the spec.
    pub negative_lang_mismatch: usize,
    pub negatives: usize,
    pub negative_shortfall: bool,
    pub train: usize,
    pub heldout: usize,
    pub config_hash: String,
}

/// Text of one record component. Arrays (e.g. conversation turns) are joined
/// with newlines; objects contribute their `text` or `content` member.
pub fn component_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(_) | Value::Number(_) => v.to_string(),
        Value::Array(items) => items
            .iter()
            .map(component_text)
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join("\n"),
        Value::Object(map) => map.get("text").or_else(|| map.get("content")).map(component_text).unwrap_or_default(),
    }
}

/// Pre-processes every record of one source, in file order.
pub fn read_positive_source(src: &PositiveSource) -> Result<(Vec<LabeledSample>, SourceReport)> {
    let f = File::open(&src.path).map_err(Error::io(&src.path))?;
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(f).split(b'\n').enumerate() {
        let line = line.map_err(Error::io(&src.path))?;
        if !line.iter().all(u8::is_ascii_whitespace) {
            lines.push((i + 1, line));
        }
    }
    let outcomes: Vec<_> = lines
        .par_iter()
        .map(|(lineno, bytes)| {
            let text = String::from_utf8_lossy(bytes);
            let record: Value = serde_json::from_str(&text).map_err(|e| Error::Malformed {
                path: src.path.clone(),
                line: *lineno,
                message: e.to_string(),
            })?;
            let id = match record.get(&src.id_field) {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                _ => lineno.to_string(),
            };
            let parts: Vec<String> = src.fields.iter().map(|f| record.get(f).map(component_text).unwrap_or_default()).collect();
            Ok(preprocess_positive(&format!("{}:{}", src.name, id), &parts, &src.name))
        })
        .collect::<Result<_>>()?;
    let mut report = SourceReport::new(&src.name);
    let mut kept = Vec::new();
    for o in outcomes {
        report.record(&o);
        if let Ok(s) = o {
            kept.push(s);
        }
    }
    Ok((kept, report))
}

/// Samples `min(cap, available)` non-empty documents from the corpus in two
/// streaming passes (count, then collect), keeping corpus order.
pub fn sample_negatives(corpus: &Path, lang: &str, cap: usize, seed: u64) -> Result<(Vec<LabeledSample>, usize, usize)> {
    let mut candidates = 0usize;
    let mut mismatch = 0usize;
    for d in read_documents(corpus)? {
        let d = d?;
        if !d.text.trim().is_empty() {
            candidates += 1;
            if d.lang != lang {
                mismatch += 1;
            }
        }
    }
    let mut r = rng::derived(seed, "negatives");
    let picks = rng::sample_indices(&mut r, candidates, cap);
    let mut next = picks.iter().peekable();
    let mut out = Vec::with_capacity(picks.len());
    let mut i = 0usize;
    for d in read_documents(corpus)? {
        let d = d?;
        if d.text.trim().is_empty() {
            continue;
        }
        if next.peek() == Some(&&i) {
            next.next();
            out.push(LabeledSample::new(d.id, d.text, Label::Negative, NEGATIVE_SOURCE));
        }
        i += 1;
    }
    Ok((out, candidates, mismatch))
}

pub fn sample_to_document(s: &LabeledSample, lang: &str) -> Document {
    Document::new(s.id.clone(), lang, s.text.clone())
        .with_meta(LABEL_KEY, s.label.as_str())
        .with_meta(SOURCE_KEY, s.source.clone())
}

pub fn document_to_sample(d: Document) -> Result<LabeledSample> {
    let label = d
        .meta
        .get(LABEL_KEY)
        .and_then(|l| Label::parse(l))
        .ok_or_else(|| Error::Data(format!("document {:?} has no valid label", d.id)))?;
    let source = d.meta.get(SOURCE_KEY).cloned().unwrap_or_default();
    Ok(LabeledSample { id: d.id, text: d.text, label, source })
}

pub fn load_labeled(path: &Path) -> Result<Vec<LabeledSample>> {
    read_documents(path)?.map(|d| document_to_sample(d?)).collect()
}

pub struct TrainsetPaths {
    pub train: PathBuf,
    pub heldout: PathBuf,
    pub report: PathBuf,
}

impl TrainsetPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            train: dir.join("train.docs.jsonl"),
            heldout: dir.join("heldout.docs.jsonl"),
            report: dir.join("trainset-report.json"),
        }
    }
}

pub fn build_trainset(spec: &TrainsetSpec, out: &TrainsetPaths, config_hash: &str) -> Result<TrainsetReport> {
    spec.validate()?;
    let mut pool = Vec::new();
    let mut sources = Vec::new();
    for src in &spec.positive_sources {
        let (kept, report) = read_positive_source(src)?;
        pool.extend(kept);
        sources.push(report);
    }
    if pool.is_empty() {
        return Err(curate_core::Error::NoPositives.into());
    }
    let positives = sample_capped(&pool, spec.cap_per_class, spec.seed, "positives");
    for s in &mut sources {
        s.sampled = positives.iter().filter(|p| p.source == s.name).count();
    }
    let (negatives, negative_candidates, mismatch) = sample_negatives(&spec.negative_corpus, &spec.lang, spec.cap_per_class, spec.seed)?;
    let shortfall = negative_candidates < spec.cap_per_class;
    if shortfall {
        warn!("negative corpus has {negative_candidates} usable documents, fewer than the cap {}", spec.cap_per_class);
    }
    if mismatch > 0 {
        warn!("{mismatch} negative documents are not tagged {}", spec.lang);
    }
    let (n_pos, n_neg) = (positives.len(), negatives.len());
    let split = split_heldout(positives, negatives, spec.seed)?;
    for (path, part) in [(&out.train, &split.train), (&out.heldout, &split.heldout)] {
        let mut w = DocumentWriter::create(path)?;
        for s in part {
            w.write(&sample_to_document(s, &spec.lang))?;
        }
        w.finish()?;
    }
    let report = TrainsetReport {
        lang: spec.lang.clone(),
        seed: spec.seed,
        cap_per_class: spec.cap_per_class,
        positive_survivors: pool.len(),
        sources: sources
            .into_iter()
            .map(|c| SourceSummary { rejection_rate: c.rejection_rate(), counts: c })
            .collect(),
        positives: n_pos,
        negative_candidates,
        negative_lang_mismatch: mismatch,
        negatives: n_neg,
        negative_shortfall: shortfall,
        train: split.train.len(),
        heldout: split.heldout.len(),
        config_hash: config_hash.into(),
    };
    write_json(&out.report, &report)?;
    Ok(report)
}
