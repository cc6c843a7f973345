//! Line-delimited JSON document files (`.docs.jsonl`).
//!
//! One object per line with required string keys `id`, `lang` and `text`;
//! any other keys are carried in `Document::meta`. Non-string values of
//! extra keys are kept as their JSON text.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use curate_core::fnv::fnv1a64;
use curate_core::{ws_token_count, Document};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    lang: String,
    text: String,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Serialize)]
struct RecordRef<'a> {
    id: &'a str,
    lang: &'a str,
    text: &'a str,
    #[serde(flatten)]
    meta: &'a BTreeMap<String, String>,
}

/// Streams documents in file order.
///
/// Duplicate ids are detected through a set of 64-bit id fingerprints, so
/// memory grows by eight bytes per document rather than per id length.
pub struct DocumentReader {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line: usize,
    seen: HashSet<u64>,
}

impl DocumentReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let f = File::open(&path).map_err(Error::io(&path))?;
        Ok(Self {
            lines: BufReader::with_capacity(1 << 20, f).lines(),
            path,
            line: 0,
            seen: HashSet::new(),
        })
    }

    fn parse(&self, line: &str) -> Result<Document> {
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
            path: self.path.clone(),
            line: self.line,
            message: e.to_string(),
        })?;
        if raw.id.is_empty() || raw.lang.is_empty() {
            return Err(Error::Malformed {
                path: self.path.clone(),
                line: self.line,
                message: "id and lang must be non-empty".into(),
            });
        }
        let meta = raw
            .extra
            .into_iter()
            .map(|(k, v)| {
                let v = match v {
                    Value::String(s) => s,
                    other => other.to_string(),
                };
                (k, v)
            })
            .collect();
        Ok(Document { id: raw.id, lang: raw.lang, text: raw.text, meta })
    }
}

impl Iterator for DocumentReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    return Some(Err(Error::Malformed {
                        path: self.path.clone(),
                        line: self.line + 1,
                        message: e.to_string(),
                    }))
                }
            };
            self.line += 1;
            if line.trim().is_empty() {
                continue;
            }
            let doc = match self.parse(&line) {
                Ok(d) => d,
                Err(e) => return Some(Err(e)),
            };
            if !self.seen.insert(fnv1a64(doc.id.as_bytes())) {
                return Some(Err(Error::DuplicateId { path: self.path.clone(), line: self.line, id: doc.id }));
            }
            return Some(Ok(doc));
        }
    }
}

pub fn read_documents(path: impl AsRef<Path>) -> Result<DocumentReader> {
    DocumentReader::open(path)
}

/// Reads a whole file into memory.
pub fn load_documents(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    read_documents(path)?.collect()
}

/// Sizes of a document file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub paths: Vec<PathBuf>,
    pub doc_count: u64,
    pub total_ws_tokens: u64,
    /// Language of the documents, or `"mul"` when they disagree.
    pub lang: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

impl CorpusManifest {
    fn add(&mut self, doc: &Document) {
        if self.doc_count == 0 {
            self.lang = doc.lang.clone();
        } else if self.lang != doc.lang {
            self.lang = "mul".into();
        }
        self.doc_count += 1;
        self.total_ws_tokens += ws_token_count(&doc.text) as u64;
    }

    pub fn merge(&mut self, other: CorpusManifest) {
        if self.doc_count == 0 {
            self.lang = other.lang;
        } else if other.doc_count > 0 && self.lang != other.lang {
            self.lang = "mul".into();
        }
        self.paths.extend(other.paths);
        self.doc_count += other.doc_count;
        self.total_ws_tokens += other.total_ws_tokens;
    }

    /// Sidecar path: `<corpus>.manifest.json`.
    pub fn sidecar(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Measure an existing document file.
pub fn scan_manifest(paths: &[PathBuf]) -> Result<CorpusManifest> {
    let mut m = CorpusManifest::default();
    for p in paths {
        for doc in read_documents(p)? {
            m.add(&doc?);
        }
        m.paths.push(p.clone());
    }
    Ok(m)
}

/// Exclusive writer for one document file.
pub struct DocumentWriter {
    path: PathBuf,
    out: BufWriter<File>,
    seen: HashSet<u64>,
    manifest: CorpusManifest,
    buf: Vec<u8>,
}

impl DocumentWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(Error::io(parent))?;
        }
        let f = File::create(&path).map_err(Error::io(&path))?;
        Ok(Self {
            out: BufWriter::with_capacity(1 << 20, f),
            manifest: CorpusManifest { paths: vec![path.clone()], ..Default::default() },
            path,
            seen: HashSet::new(),
            buf: Vec::new(),
        })
    }

    pub fn write(&mut self, doc: &Document) -> Result<()> {
        if !self.seen.insert(fnv1a64(doc.id.as_bytes())) {
            return Err(Error::DuplicateId {
                path: self.path.clone(),
                line: self.manifest.doc_count as usize + 1,
                id: doc.id.clone(),
            });
        }
        if doc.id.is_empty() || doc.lang.is_empty() {
            return Err(Error::Data(format!("{}: document with empty id or lang", self.path.display())));
        }
        if doc.meta.keys().any(|k| matches!(k.as_str(), "id" | "lang" | "text")) {
            return Err(Error::Data(format!("document {}: meta key shadows a record field", doc.id)));
        }
        self.buf.clear();
        serde_json::to_writer(
            &mut self.buf,
            &RecordRef { id: &doc.id, lang: &doc.lang, text: &doc.text, meta: &doc.meta },
        )
        .expect("documents serialize");
        self.buf.push(b'\n');
        self.out.write_all(&self.buf).map_err(Error::io(&self.path))?;
        self.manifest.add(doc);
        Ok(())
    }

    pub fn finish(mut self) -> Result<CorpusManifest> {
        self.out.flush().map_err(Error::io(&self.path))?;
        Ok(self.manifest)
    }
}

pub fn write_documents<'a, I>(docs: I, path: impl AsRef<Path>) -> Result<CorpusManifest>
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut w = DocumentWriter::create(path)?;
    for d in docs {
        w.write(d)?;
    }
    w.finish()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(Error::io(parent))?;
    }
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(Error::io(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Format { path: path.into(), message: e.to_string() })
}
