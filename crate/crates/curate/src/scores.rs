//! Score tables on disk and parallel scoring.
//!
//! TSV layout: a header line `#scorer=<name>\tconfig=<hash>`, then one
//! `doc_id\tscore` line per document in corpus order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use curate_core::cosine::{ReferenceSet, BLOCK};
use curate_core::embedding::EmbeddingMatrix;
use curate_core::mlp::{MlpModel, MlpScorer};
use curate_core::ngram::NgramModel;
use curate_core::select::ScoreTable;
use curate_core::Document;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub fn write_scores(table: &ScoreTable, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(f);
    let bad = |s: &str| s.contains(['\t', '\n', '\r']);
    if bad(&table.scorer) || bad(&table.config_hash) {
        return Err(Error::Data("scorer name and config hash must not contain tabs or newlines".into()));
    }
    let mut out = format!("#scorer={}\tconfig={}\n", table.scorer, table.config_hash);
    for e in &table.entries {
        if bad(&e.id) {
            return Err(Error::Data(format!("document id {:?} cannot be written to a score table", e.id)));
        }
        out.push_str(&e.id);
        out.push('\t');
        out.push_str(&e.score.to_string());
        out.push('\n');
        if out.len() > 1 << 20 {
            w.write_all(out.as_bytes()).map_err(Error::io(path))?;
            out.clear();
        }
    }
    w.write_all(out.as_bytes()).map_err(Error::io(path))?;
    w.flush().map_err(Error::io(path))
}

pub fn read_scores(path: &Path) -> Result<ScoreTable> {
    let f = File::open(path).map_err(Error::io(path))?;
    let mut lines = BufReader::new(f).lines();
    let malformed = |line: usize, message: &str| Error::Malformed { path: path.into(), line, message: message.into() };
    let header = match lines.next() {
        Some(l) => l.map_err(Error::io(path))?,
        None => return Err(malformed(1, "missing header")),
    };
    let (scorer, hash) = header
        .strip_prefix("#scorer=")
        .and_then(|rest| rest.split_once("\tconfig="))
        .ok_or_else(|| malformed(1, "header must be `#scorer=<name>\\tconfig=<hash>`"))?;
    let mut table = ScoreTable::new(scorer, hash);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(Error::io(path))?;
        if line.is_empty() {
            continue;
        }
        let (id, score) = line.split_once('\t').ok_or_else(|| malformed(i + 2, "expected `doc_id\\tscore`"))?;
        let score: f64 = score.parse().map_err(|_| malformed(i + 2, "score is not a number"))?;
        table.push(id, score);
    }
    table.validate()?;
    Ok(table)
}

pub fn score_ngram(model: &NgramModel, docs: &[Document], scorer: &str, config_hash: &str) -> ScoreTable {
    let scores: Vec<f32> = docs
        .par_iter()
        .with_min_len(64)
        .map_init(|| model.scorer(), |s, d| s.score(&d.text))
        .collect();
    table_from(scorer, config_hash, docs.iter().map(|d| d.id.as_str()), scores)
}

pub fn score_mlp(model: &MlpModel, matrix: &EmbeddingMatrix, scorer: &str, config_hash: &str) -> Result<ScoreTable> {
    MlpScorer::new(model, matrix.dim())?;
    let scores = (0..matrix.len())
        .into_par_iter()
        .with_min_len(64)
        .map_init(|| MlpScorer::new(model, matrix.dim()).unwrap(), |s, i| s.score(matrix.row(i)))
        .collect::<curate_core::Result<Vec<f32>>>()?;
    Ok(table_from(scorer, config_hash, matrix.ids().iter().map(String::as_str), scores))
}

pub struct CosineRun {
    pub table: ScoreTable,
    pub zero_norm_ids: Vec<String>,
}

/// Blocked max-cosine scoring, blocks processed in parallel. Per-row results
/// do not depend on block grouping, so output equals the sequential scorer.
pub fn score_cosine(refs: &ReferenceSet, matrix: &EmbeddingMatrix, scorer: &str, config_hash: &str) -> Result<CosineRun> {
    if matrix.dim() != refs.dim {
        return Err(curate_core::Error::DimensionMismatch { expected: refs.dim, got: matrix.dim() }.into());
    }
    let n = matrix.len();
    let blocks: Vec<(Vec<f32>, Vec<bool>)> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let rows: Vec<&[f32]> = (b * BLOCK..((b + 1) * BLOCK).min(n)).map(|i| matrix.row(i)).collect();
            let mut out = vec![0.0; rows.len()];
            let flags = refs.score_block(&rows, &mut out);
            (out, flags)
        })
        .collect();
    let mut scores = Vec::with_capacity(n);
    let mut zero_norm_ids = Vec::new();
    for (out, flags) in blocks {
        for (s, z) in out.into_iter().zip(flags) {
            if z {
                zero_norm_ids.push(matrix.ids()[scores.len()].clone());
            }
            scores.push(s);
        }
    }
    let table = table_from(scorer, config_hash, matrix.ids().iter().map(String::as_str), scores);
    Ok(CosineRun { table, zero_norm_ids })
}

/// Reorders `table` to follow `doc_ids`, failing on any id without a score.
pub fn align_to_corpus<'a>(table: &ScoreTable, doc_ids: impl IntoIterator<Item = &'a str>) -> Result<ScoreTable> {
    let index: std::collections::HashMap<&str, f64> = table.entries.iter().map(|e| (e.id.as_str(), e.score)).collect();
    let mut out = ScoreTable::new(table.scorer.clone(), table.config_hash.clone());
    for id in doc_ids {
        let s = index.get(id).ok_or_else(|| Error::Data(format!("document {id:?} has no score")))?;
        out.push(id, *s);
    }
    Ok(out)
}

fn table_from<'a>(scorer: &str, config_hash: &str, ids: impl Iterator<Item = &'a str>, scores: Vec<f32>) -> ScoreTable {
    let mut t = ScoreTable::new(scorer, config_hash);
    t.entries.reserve(scores.len());
    for (id, s) in ids.zip(scores) {
        t.push(id, f64::from(s));
    }
    t
}
