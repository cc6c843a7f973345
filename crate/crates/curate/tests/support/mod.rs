//! Deterministic toy corpus, positive and benchmark sources, and a
//! stand-in embedder used to produce the checked-in `.embx` fixture.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use curate::corpus::write_documents;
use curate::formats::embx;
use curate_core::embedding::EmbeddingMatrix;
use curate_core::fnv::fnv1a64;
use curate_core::{rng, Document};
use rand::seq::SliceRandom;
use rand::Rng;

pub const LANG: &str = "dan_Latn";
pub const EMBED_DIM: usize = 64;
pub const EMBED_MODEL: &str = "toy-bag-of-words-64";
pub const CORPUS_DOCS: usize = 1000;
pub const POSITIVES: usize = 300;
pub const UNK_POSITIVES: usize = 30;
pub const CONTAMINATED: [usize; 3] = [17, 301, 642];

const KNOWLEDGE: [&str; 24] = [
    "theorem", "proof", "molecule", "history", "river", "constitution", "equation", "climate", "protein", "language",
    "grammar", "museum", "orbit", "voltage", "harvest", "parliament", "fraction", "species", "enzyme", "treaty",
    "gravity", "library", "dialect", "geology",
];
const NOISE: [&str; 24] = [
    "buy", "cheap", "click", "casino", "bonus", "login", "cookie", "subscribe", "deal", "offer", "free", "win",
    "sale", "discount", "promo", "download", "now", "best", "price", "shipping", "cart", "limited", "viral", "share",
];
const GLUE: [&str; 8] = ["og", "i", "er", "det", "en", "at", "til", "med"];

pub const BENCH_QUESTION: &str = "Hvilken flod krydser byen og hvorfor blev broen bygget i det attende aarhundrede efter den store oversvoemmelse";

fn words(r: &mut rng::Rng, vocab: &[&str], n: usize) -> String {
    (0..n)
        .map(|_| if r.gen_bool(0.3) { *GLUE.choose(r).unwrap() } else { *vocab.choose(r).unwrap() })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Short knowledge-style documents and long spam-style ones.
pub fn toy_corpus() -> Vec<Document> {
    let mut r = rng::seeded(2024);
    (0..CORPUS_DOCS)
        .map(|i| {
            let quality = i % 5 < 2;
            let mut text = if quality {
                let n = r.gen_range(15..45);
                words(&mut r, &KNOWLEDGE, n)
            } else {
                let n = r.gen_range(60..160);
                words(&mut r, &NOISE, n)
            };
            if CONTAMINATED.contains(&i) {
                text = format!("{text}. {BENCH_QUESTION}?");
            }
            Document::new(format!("web{i:04}"), LANG, text)
        })
        .collect()
}

/// `(id, inputs, targets)` records; the first `UNK_POSITIVES` carry `<unk>`.
pub fn toy_positives() -> Vec<(String, String, String)> {
    let mut r = rng::seeded(77);
    (0..POSITIVES)
        .map(|i| {
            let mut q = words(&mut r, &KNOWLEDGE, 12);
            let a = words(&mut r, &KNOWLEDGE, 20);
            if i < UNK_POSITIVES {
                q.push_str(" <unk>");
            }
            (format!("{i}"), q, a)
        })
        .collect()
}

/// Mean of per-word pseudo-random vectors seeded by the word's hash.
pub fn pseudo_embed(text: &str) -> Vec<f32> {
    let mut sum = vec![0.0f64; EMBED_DIM];
    let mut n = 0usize;
    for w in text.split_whitespace() {
        let w = w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
        if w.is_empty() {
            continue;
        }
        let mut r = rng::seeded(fnv1a64(w.as_bytes()));
        for s in sum.iter_mut() {
            *s += r.gen_range(-1.0..1.0);
        }
        n += 1;
    }
    sum.into_iter().map(|s| if n == 0 { 0.0 } else { (s / n as f64) as f32 }).collect()
}

pub fn toy_embeddings() -> EmbeddingMatrix {
    let mut m = EmbeddingMatrix::new(EMBED_DIM);
    for d in toy_corpus() {
        m.push(d.id, &pseudo_embed(&d.text)).unwrap();
    }
    for (id, q, a) in toy_positives() {
        m.push(format!("aya:{id}"), &pseudo_embed(&format!("{q}\n{a}"))).unwrap();
    }
    m
}

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub fn fixture_embeddings() -> PathBuf {
    data_dir().join("toy.embx")
}

pub fn write_toy_embeddings(path: &Path) {
    let mut ext = embx::Extensions::new();
    ext.insert(embx::EXT_MODEL.into(), EMBED_MODEL.into());
    embx::write_matrix(&toy_embeddings(), ext, path).unwrap();
}

pub struct Toy {
    pub dir: PathBuf,
    pub corpus: PathBuf,
    pub positives: PathBuf,
    pub bench: PathBuf,
    pub metrics: PathBuf,
    pub embeddings: PathBuf,
}

/// Writes the toy inputs into `dir` and points at the checked-in embeddings.
pub fn write_toy(dir: &Path) -> Toy {
    fs::create_dir_all(dir).unwrap();
    let corpus = dir.join("corpus.docs.jsonl");
    write_documents(&toy_corpus(), &corpus).unwrap();
    let positives = dir.join("aya.jsonl");
    let lines: Vec<String> = toy_positives()
        .into_iter()
        .map(|(id, q, a)| serde_json::json!({ "id": id, "inputs": q, "targets": a }).to_string())
        .collect();
    fs::write(&positives, lines.join("\n") + "\n").unwrap();
    let bench = dir.join("bench.jsonl");
    fs::write(&bench, serde_json::json!({ "question": BENCH_QUESTION, "answer": "Aaen" }).to_string() + "\n").unwrap();
    let metrics = dir.join("metrics.csv");
    fs::write(&metrics, "task,select-ngram,select-mlp,mix\nqa,0.31,0.35,0.30\nnli,0.52,0.55,0.55\n").unwrap();
    Toy { dir: dir.to_path_buf(), corpus, positives, bench, metrics, embeddings: fixture_embeddings() }
}

/// Full pipeline over the toy inputs: trainset, all three scorers,
/// selection, decontamination, replay and the comparison report.
pub fn toy_config(t: &Toy, work_dir: &Path, seed: u64) -> String {
    format!(
        r#"language = "{LANG}"
seed = {seed}
work_dir = "{work}"

[[stage]]
name = "trainset"
kind = "build-trainset"
negative_corpus = "{corpus}"
cap_per_class = 250
positive_sources = [{{ name = "aya", path = "{pos}", fields = ["inputs", "targets"] }}]

[[stage]]
name = "ngram"
kind = "train-ngram"
trainset = "trainset"
dim = 16
bucket_count = 65536
epochs = 10
lr = 0.5

[[stage]]
name = "mlp"
kind = "train-mlp"
trainset = "trainset"
embeddings = ["{emb}"]
hidden_dim = 32
epochs = 20
lr = 0.003

[[stage]]
name = "refs"
kind = "build-refs"
trainset = "trainset"
embeddings = ["{emb}"]
k = 64

[[stage]]
name = "score-ngram"
kind = "score"
model = "ngram"
corpus = ["{corpus}"]

[[stage]]
name = "score-mlp"
kind = "score"
model = "mlp"
corpus = ["{corpus}"]
embeddings = ["{emb}"]

[[stage]]
name = "score-cos"
kind = "score"
model = "refs"
corpus = ["{corpus}"]
embeddings = ["{emb}"]

[[stage]]
name = "select-ngram"
kind = "select"
scores = "score-ngram"
corpus = ["{corpus}"]
fraction = 0.1

[[stage]]
name = "select-mlp"
kind = "select"
scores = "score-mlp"
corpus = ["{corpus}"]
target_tokens = 20000
min_fraction = 0.1

[[stage]]
name = "select-cos"
kind = "select"
scores = "score-cos"
corpus = ["{corpus}"]
fraction = 0.4

[[stage]]
name = "decont"
kind = "decontaminate"
input = ["select-cos"]
benchmarks = [{{ name = "bench", path = "{bench}", fields = ["question"] }}]

[[stage]]
name = "mix"
kind = "mix"
filtered = "select-ngram"
raw = ["{corpus}"]
rate = 0.05

[[stage]]
name = "report"
kind = "report"
baseline = ["{corpus}"]
runs = ["select-ngram", "select-mlp", "mix"]
metrics = "{metrics}"
"#,
        work = work_dir.display(),
        corpus = t.corpus.display(),
        pos = t.positives.display(),
        emb = t.embeddings.display(),
        bench = t.bench.display(),
        metrics = t.metrics.display(),
    )
}

/// Relative path → bytes for every file under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Zeroes `duration_ms` so timing noise does not count as a difference.
pub fn strip_durations(bytes: &[u8]) -> Vec<u8> {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    fn walk(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(m) => {
                if let Some(d) = m.get_mut("duration_ms") {
                    *d = 0.into();
                }
                m.values_mut().for_each(walk);
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(walk),
            _ => {}
        }
    }
    walk(&mut v);
    serde_json::to_vec(&v).unwrap()
}
