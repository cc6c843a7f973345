//! Length statistics, average-rank tables and filter comparisons.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use curate_core::rank::{average_rank, Direction, MetricTable};
use curate_core::stats::{LengthAccumulator, LengthStats};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{read_documents, write_json};
use crate::error::{Error, Result};

/// Length statistics over several files; files are scanned in parallel and
/// merged in order.
pub fn corpus_length_stats(paths: &[PathBuf]) -> Result<LengthStats> {
    let parts: Vec<LengthAccumulator> = paths
        .par_iter()
        .map(|p| read_documents(p)?.map(|d| d.map(|d| d.ws_tokens() as u64)).collect::<Result<LengthAccumulator>>())
        .collect::<Result<_>>()?;
    let mut acc = LengthAccumulator::default();
    for p in parts {
        acc.merge(p);
    }
    Ok(acc.finish()?)
}

/// CSV with a header of approach names (first cell labels the task column)
/// and one row per task.
pub fn read_metric_table(path: &Path, direction: Direction) -> Result<MetricTable> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let approaches: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut tasks = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let mut cells = rec.iter();
        tasks.push(cells.next().unwrap_or_default().trim().to_string());
        let row = cells
            .map(|c| {
                c.trim().parse::<f64>().map_err(|_| Error::Malformed {
                    path: path.into(),
                    line: i + 2,
                    message: format!("{c:?} is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        values.push(row);
    }
    let table = MetricTable { approaches, tasks, values, direction };
    table.validate()?;
    Ok(table)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Malformed { path: path.into(), line, message: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub approach: String,
    pub average_rank: f64,
}

pub fn rank_table(table: &MetricTable) -> Result<Vec<RankRow>> {
    Ok(average_rank(table)?
        .into_iter()
        .map(|(approach, average_rank)| RankRow { approach, average_rank })
        .collect())
}

pub fn write_ranks_csv(rows: &[RankRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["approach", "average_rank"]).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record([r.approach.as_str(), &format!("{:.4}", r.average_rank)]).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(Error::io(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRow {
    pub name: String,
    pub length: LengthStats,
    pub doc_fraction: f64,
    pub token_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    /// Baseline first, then runs in the given order.
    pub rows: Vec<FilterRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranks: Option<Vec<RankRow>>,
}

/// Compares filtered corpora against the corpus they were drawn from.
/// Replayed documents are matched under their original id.
pub fn compare_filters(baseline: (&str, &[PathBuf]), runs: &[(String, Vec<PathBuf>)], metrics: Option<&MetricTable>) -> Result<Comparison> {
    if runs.is_empty() {
        return Err(Error::Data("no filtered runs to compare".into()));
    }
    let mut ids = HashSet::new();
    let mut acc = LengthAccumulator::default();
    for p in baseline.1 {
        for d in read_documents(p)? {
            let d = d?;
            acc.push(d.ws_tokens() as u64);
            ids.insert(d.id);
        }
    }
    let base = acc.finish()?;
    let mut rows = vec![FilterRow { name: baseline.0.into(), length: base, doc_fraction: 1.0, token_fraction: 1.0 }];
    for (name, paths) in runs {
        let mut acc = LengthAccumulator::default();
        for p in paths {
            for d in read_documents(p)? {
                let d = d?;
                let original = match d.meta.get("replay").map(String::as_str) {
                    Some("true") => d.id.strip_prefix("replay:").unwrap_or(&d.id),
                    _ => d.id.as_str(),
                };
                if !ids.contains(original) {
                    return Err(Error::Data(format!("run {name:?}: document {:?} is not in the baseline corpus", d.id)));
                }
                acc.push(d.ws_tokens() as u64);
            }
        }
        let length = acc.finish()?;
        rows.push(FilterRow {
            name: name.clone(),
            doc_fraction: length.count as f64 / base.count as f64,
            token_fraction: if base.total == 0 { 0.0 } else { length.total as f64 / base.total as f64 },
            length,
        });
    }
    let ranks = metrics.map(rank_table).transpose()?;
    Ok(Comparison { baseline: baseline.0.into(), rows, ranks })
}

/// Writes `<stem>.json` and `<stem>.csv` (one row per corpus).
pub fn write_comparison(c: &Comparison, json: &Path, csv_path: &Path) -> Result<()> {
    write_json(json, c)?;
    let mut w = csv::Writer::from_path(csv_path).map_err(|e| csv_error(csv_path, e))?;
    w.write_record(["name", "docs", "tokens", "mean", "median", "std", "min", "max", "doc_fraction", "token_fraction"])
        .map_err(|e| csv_error(csv_path, e))?;
    for r in &c.rows {
        let l = &r.length;
        w.write_record([
            r.name.clone(),
            l.count.to_string(),
            l.total.to_string(),
            l.mean.to_string(),
            l.median.to_string(),
            l.std.to_string(),
            l.min.to_string(),
            l.max.to_string(),
            r.doc_fraction.to_string(),
            r.token_fraction.to_string(),
        ])
        .map_err(|e| csv_error(csv_path, e))?;
    }
    w.flush().map_err(Error::io(csv_path))
}
