//! Benchmark index building and corpus decontamination over files.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use curate_core::decont::{build_index, DecontReport, Decontaminator, IndexBuildReport, NgramIndex};
use curate_core::Document;
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{read_documents, CorpusManifest, DocumentWriter};
use crate::error::{Error, Result};
use crate::trainset::component_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSource {
    pub name: String,
    pub path: PathBuf,
    /// Each listed field is indexed as a separate text.
    pub fields: Vec<String>,
}

pub fn read_benchmark_texts(src: &BenchmarkSource) -> Result<Vec<String>> {
    let f = File::open(&src.path).map_err(Error::io(&src.path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(Error::io(&src.path))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            path: src.path.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        for field in &src.fields {
            if let Some(t) = v.get(field).map(component_text).filter(|t| !t.is_empty()) {
                out.push(t);
            }
        }
    }
    Ok(out)
}

pub fn build_index_from_files(sources: &[BenchmarkSource], n: usize) -> Result<(NgramIndex, IndexBuildReport)> {
    let mut texts = Vec::new();
    for s in sources {
        for t in read_benchmark_texts(s)? {
            texts.push((s.name.clone(), t));
        }
    }
    let (index, report) = build_index(texts.iter().map(|(b, t)| (b.as_str(), t.as_str())), n)?;
    if report.short_texts > 0 {
        info!("{} of {} benchmark texts are shorter than {n} tokens and contribute no grams", report.short_texts, report.texts);
    }
    Ok((index, report))
}

const CHUNK: usize = 1024;
const BATCH: usize = 1 << 16;

/// Keep flags for `docs` and the merged report, scanning chunks in parallel.
/// Reports merge in chunk order, so the result equals a sequential scan.
pub fn scan_batch(docs: &[Document], index: &NgramIndex) -> Result<(Vec<bool>, DecontReport)> {
    Decontaminator::new(index)?;
    let parts: Vec<(Vec<bool>, DecontReport)> = docs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut d = Decontaminator::new(index).unwrap();
            let keep = chunk.iter().map(|doc| d.keep(doc)).collect();
            (keep, d.finish())
        })
        .collect();
    let mut keep = Vec::with_capacity(docs.len());
    let mut report = Decontaminator::new(index)?.finish();
    for (k, r) in parts {
        keep.extend(k);
        report.merge(r);
    }
    Ok((keep, report))
}

/// Streams `inputs` through the index, writing clean documents to `output`.
pub fn decontaminate_files(inputs: &[PathBuf], index: &NgramIndex, output: &Path) -> Result<(DecontReport, CorpusManifest)> {
    let mut report = Decontaminator::new(index)?.finish();
    let mut w = DocumentWriter::create(output)?;
    let mut batch = Vec::with_capacity(BATCH);
    let flush = |batch: &mut Vec<Document>, w: &mut DocumentWriter, report: &mut DecontReport| -> Result<()> {
        let (keep, r) = scan_batch(batch, index)?;
        for (d, k) in batch.iter().zip(keep) {
            if k {
                w.write(d)?;
            }
        }
        report.merge(r);
        batch.clear();
        Ok(())
    };
    for p in inputs {
        for d in read_documents(p)? {
            batch.push(d?);
            if batch.len() == BATCH {
                flush(&mut batch, &mut w, &mut report)?;
            }
        }
    }
    flush(&mut batch, &mut w, &mut report)?;
    Ok((report, w.finish()?))
}
