//! `EMBX1`: per-document embeddings.
//!
//! ```text
//! "EMBX1" | u32 dim | u64 count
//! u32 ext_len | ext_len bytes of JSON object (string → string)
//! count × (u32 id_len + UTF-8 id)
//! f32 rows[count × dim], row-major
//! ```
//! The extension block carries the producing model tag and config hash.
//! Rows are stored as produced, not normalized.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use curate_core::cosine::ReferenceSet;
use curate_core::embedding::EmbeddingMatrix;

use super::{BinReader, BinWriter};
use crate::error::{Error, Result};

pub const MAGIC: &str = "EMBX1";
pub const EXT_MODEL: &str = "model";
pub const EXT_CONFIG_HASH: &str = "config_hash";
pub const EXT_KIND: &str = "kind";
pub const KIND_COSINE_REFS: &str = "cosine-refs";

pub type Extensions = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbxSummary {
    pub dim: usize,
    pub count: u64,
}

/// Streams rows to a spool file so the id table can precede the payload.
pub struct EmbxWriter {
    path: PathBuf,
    dim: usize,
    ext: Extensions,
    ids: Vec<String>,
    seen: HashSet<String>,
    spool: BufWriter<File>,
}

impl EmbxWriter {
    pub fn create(path: &Path, dim: usize, ext: Extensions) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Data("embedding dim must be positive".into()));
        }
        let spool = tempfile::tempfile().map_err(Error::io(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            dim,
            ext,
            ids: Vec::new(),
            seen: HashSet::new(),
            spool: BufWriter::with_capacity(1 << 20, spool),
        })
    }

    pub fn write_row(&mut self, id: &str, row: &[f32]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Data(format!("embedding for {id:?} has dim {}, expected {}", row.len(), self.dim)));
        }
        if let Some(i) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("embedding for {id:?} has non-finite value at {i}")));
        }
        if !self.seen.insert(id.to_string()) {
            return Err(Error::DuplicateId { path: self.path.clone(), line: self.ids.len() + 1, id: id.into() });
        }
        let mut bytes = Vec::with_capacity(row.len() * 4);
        for v in row {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        self.spool.write_all(&bytes).map_err(Error::io(&self.path))?;
        self.ids.push(id.to_string());
        Ok(())
    }

    pub fn finish(self) -> Result<EmbxSummary> {
        let path = self.path;
        let mut spool = self.spool.into_inner().map_err(|e| Error::Io { path: path.clone(), source: e.into_error() })?;
        spool.seek(SeekFrom::Start(0)).map_err(Error::io(&path))?;
        let f = File::create(&path).map_err(Error::io(&path))?;
        let mut w = BinWriter::new(BufWriter::with_capacity(1 << 20, f), &path);
        w.bytes(MAGIC.as_bytes())?;
        w.u32(self.dim as u32)?;
        w.u64(self.ids.len() as u64)?;
        w.str(&serde_json::to_string(&self.ext).unwrap())?;
        for id in &self.ids {
            w.str(id)?;
        }
        let mut out = w.into_inner();
        std::io::copy(&mut spool, &mut out).map_err(Error::io(&path))?;
        out.flush().map_err(Error::io(&path))?;
        Ok(EmbxSummary { dim: self.dim, count: self.ids.len() as u64 })
    }
}

/// Iterates rows one at a time; only the id table is held in memory.
pub struct EmbxReader {
    r: BinReader<BufReader<File>>,
    dim: usize,
    ext: Extensions,
    ids: Vec<String>,
    next: usize,
    buf: Vec<f32>,
}

impl EmbxReader {
    pub fn open(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(Error::io(path))?;
        let mut r = BinReader::new(BufReader::with_capacity(1 << 20, f), path);
        r.magic(MAGIC)?;
        let dim = r.u32()? as usize;
        let count = r.u64()?;
        let ext: Extensions = serde_json::from_str(&r.str()?).map_err(|e| r.bad(format!("extension block: {e}")))?;
        let mut ids = Vec::with_capacity(count.min(1 << 24) as usize);
        let mut seen = HashSet::with_capacity(ids.capacity());
        for i in 0..count {
            let id = r.str()?;
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateId { path: path.to_path_buf(), line: i as usize + 1, id });
            }
            ids.push(id);
        }
        Ok(Self { r, dim, ext, ids, next: 0, buf: vec![0.0; dim] })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn extensions(&self) -> &Extensions {
        &self.ext
    }

    /// Next `(id, row)`; the row is checked for finiteness.
    pub fn next_row(&mut self) -> Result<Option<(&str, &[f32])>> {
        if self.next == self.ids.len() {
            self.r.expect_end()?;
            return Ok(None);
        }
        self.r.f32s_into(&mut self.buf)?;
        let i = self.next;
        self.next += 1;
        if let Some(j) = self.buf.iter().position(|v| !v.is_finite()) {
            return Err(Error::Core(curate_core::Error::NonFinite(format!("{}: row {:?} column {j}", self.r.path().display(), self.ids[i]))));
        }
        Ok(Some((&self.ids[i], &self.buf)))
    }
}

pub fn write_matrix(matrix: &EmbeddingMatrix, ext: Extensions, path: &Path) -> Result<EmbxSummary> {
    let mut w = EmbxWriter::create(path, matrix.dim(), ext)?;
    for (id, row) in matrix.iter() {
        w.write_row(id, row)?;
    }
    w.finish()
}

pub fn read_matrix(path: &Path) -> Result<(EmbeddingMatrix, Extensions)> {
    let mut r = EmbxReader::open(path)?;
    let mut m = EmbeddingMatrix::new(r.dim());
    while let Some((id, row)) = r.next_row()? {
        m.push(id.to_string(), row)?;
    }
    let ext = r.ext;
    Ok((m, ext))
}

/// Reads several shards into one matrix. All shards must share dim and model tag.
pub fn read_shards(paths: &[PathBuf]) -> Result<(EmbeddingMatrix, Extensions)> {
    let mut out: Option<(EmbeddingMatrix, Extensions)> = None;
    for p in paths {
        let (m, ext) = read_matrix(p)?;
        match &mut out {
            None => out = Some((m, ext)),
            Some((acc, acc_ext)) => {
                if acc.dim() != m.dim() {
                    return Err(Error::Format { path: p.clone(), message: format!("dim {} differs from {}", m.dim(), acc.dim()) });
                }
                if acc_ext.get(EXT_MODEL) != ext.get(EXT_MODEL) {
                    return Err(Error::Format { path: p.clone(), message: "embeddings from a different model".into() });
                }
                if let (Some(a), Some(b)) = (acc_ext.get(EXT_CONFIG_HASH), ext.get(EXT_CONFIG_HASH)) {
                    if a != b {
                        return Err(Error::HashMismatch { what: p.display().to_string(), expected: a.clone(), found: b.clone() });
                    }
                }
                for (id, row) in m.iter() {
                    acc.push(id.to_string(), row)?;
                }
            }
        }
    }
    let (m, ext) = out.ok_or_else(|| Error::Data("no embedding shards given".into()))?;
    m.validate()?;
    Ok((m, ext))
}

pub fn save_refs(refs: &ReferenceSet, mut ext: Extensions, path: &Path) -> Result<EmbxSummary> {
    ext.insert(EXT_KIND.into(), KIND_COSINE_REFS.into());
    ext.insert("requested_k".into(), refs.requested_k.to_string());
    ext.insert("seed".into(), refs.seed.to_string());
    ext.insert("skipped_zero_norm".into(), refs.skipped_zero_norm.to_string());
    let mut w = EmbxWriter::create(path, refs.dim, ext)?;
    for (i, id) in refs.ids.iter().enumerate() {
        w.write_row(id, refs.row(i))?;
    }
    w.finish()
}

pub fn load_refs(path: &Path) -> Result<(ReferenceSet, Extensions)> {
    let (m, ext) = read_matrix(path)?;
    if ext.get(EXT_KIND).map(String::as_str) != Some(KIND_COSINE_REFS) {
        return Err(Error::Format { path: path.into(), message: "not a cosine reference set".into() });
    }
    let num = |key: &str| -> Result<u64> {
        ext.get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format { path: path.into(), message: format!("missing {key}") })
    };
    let dim = m.dim();
    let ids = m.ids().to_vec();
    let mut refs = ReferenceSet::from_normalized(dim, ids, m.data().to_vec(), num("requested_k")? as usize, num("seed")?)?;
    refs.skipped_zero_norm = num("skipped_zero_norm")? as usize;
    Ok((refs, ext))
}

/// Reads the header and extension block only.
pub fn peek(path: &Path) -> Result<(EmbxSummary, Extensions)> {
    let f = File::open(path).map_err(Error::io(path))?;
    let mut r = BinReader::new(BufReader::new(f.take(1 << 24)), path);
    r.magic(MAGIC)?;
    let dim = r.u32()? as usize;
    let count = r.u64()?;
    let ext = serde_json::from_str(&r.str()?).map_err(|e| r.bad(format!("extension block: {e}")))?;
    Ok((EmbxSummary { dim, count }, ext))
}
