//! One function per pipeline step, shared by the CLI subcommands and the
//! pipeline runner. Every output carries the config hash it was produced
//! under: binary formats in their headers, score tables in the header line,
//! JSON reports in a `config_hash` field and document files in a
//! `<file>.manifest.json` sidecar.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use curate_core::cosine::{build_reference_set, DEFAULT_K};
use curate_core::decont::IndexBuildReport;
use curate_core::embedding::{align, EmbeddingMatrix};
use curate_core::mlp::{accuracy, train_mlp, MlpConfig, MlpTrainReport};
use curate_core::ngram::{preset_for_language, train_ngram, NgramTrainReport, TokenMode};
use curate_core::rank::Direction;
use curate_core::select::{FilterStats, MixStats, SelectionPlan};
use curate_core::stats::LengthStats;
use curate_core::trainset::{Label, LabeledSample};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::analysis::{compare_filters, corpus_length_stats, rank_table, read_metric_table, write_comparison, write_ranks_csv, RankRow};
use crate::corpus::{read_documents, read_json, scan_manifest, write_json, CorpusManifest};
use crate::decont::{build_index_from_files, decontaminate_files, BenchmarkSource};
use crate::error::{Error, Result};
use crate::formats::{embx, mlp_model, ngram_index, ngram_model};
use crate::scores::{align_to_corpus, read_scores, score_cosine, score_mlp, score_ngram, write_scores};
use crate::selection::{filter_files, mix_files, plan_for_corpus, PlanReport, Retention};
use crate::trainset::{build_trainset, load_labeled, TrainsetPaths, TrainsetReport, TrainsetSpec};

/// Files a step wrote and the document counts it saw.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSummary {
    pub outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub docs_in: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens_in: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub docs_out: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens_out: Option<u64>,
}

impl StepSummary {
    fn with_input(mut self, m: &CorpusManifest) -> Self {
        self.docs_in = Some(m.doc_count);
        self.tokens_in = Some(m.total_ws_tokens);
        self
    }

    fn with_output(mut self, m: &CorpusManifest) -> Self {
        self.docs_out = Some(self.docs_out.unwrap_or(0) + m.doc_count);
        self.tokens_out = Some(self.tokens_out.unwrap_or(0) + m.total_ws_tokens);
        self
    }
}

fn finish_corpus(mut m: CorpusManifest, config_hash: &str) -> Result<CorpusManifest> {
    m.config_hash = Some(config_hash.into());
    let path = m.paths.first().cloned().expect("writer manifests name their file");
    m.save(&CorpusManifest::sidecar(&path))?;
    Ok(m)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ngram,
    Mlp,
    Cosine,
}

impl ModelKind {
    pub fn scorer_name(self) -> &'static str {
        match self {
            ModelKind::Ngram => "ngram",
            ModelKind::Mlp => "mlp",
            ModelKind::Cosine => "cosine",
        }
    }

    /// Identifies a model file by its magic bytes.
    pub fn detect(path: &Path) -> Result<Self> {
        let mut magic = [0u8; 5];
        File::open(path)
            .and_then(|mut f| f.read_exact(&mut magic))
            .map_err(Error::io(path))?;
        match &magic {
            b"NGQF1" => Ok(ModelKind::Ngram),
            b"MLPQ1" => Ok(ModelKind::Mlp),
            b"EMBX1" => Ok(ModelKind::Cosine),
            _ => Err(Error::BadMagic { path: path.into(), expected: "NGQF1, MLPQ1 or EMBX1" }),
        }
    }

    pub fn needs_embeddings(self) -> bool {
        self != ModelKind::Ngram
    }
}

// --- training sets ---------------------------------------------------------

pub fn run_build_trainset(spec: &TrainsetSpec, out_dir: &Path, config_hash: &str) -> Result<(TrainsetReport, StepSummary)> {
    create_dir(out_dir)?;
    let paths = TrainsetPaths::in_dir(out_dir);
    let report = build_trainset(spec, &paths, config_hash)?;
    let mut summary = StepSummary { outputs: vec![paths.train.clone(), paths.heldout.clone(), paths.report.clone()], ..Default::default() };
    for p in [&paths.train, &paths.heldout] {
        let m = finish_corpus(scan_manifest(std::slice::from_ref(p))?, config_hash)?;
        summary = summary.with_output(&m);
    }
    Ok((report, summary))
}

// --- n-gram classifier -----------------------------------------------------

/// Settings left unset fall back to the language preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NgramOverrides {
    pub mode: Option<TokenMode>,
    pub ngram_order: Option<usize>,
    pub min_count: Option<u32>,
    pub lowercase: Option<bool>,
    pub epochs: Option<u32>,
    pub lr: Option<f64>,
    pub dim: Option<usize>,
    pub bucket_count: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramStageReport {
    pub train: NgramTrainReport,
    pub vocab: usize,
    pub heldout_accuracy: Option<f64>,
    pub config_hash: String,
}

pub fn run_train_ngram(
    train: &Path,
    heldout: Option<&Path>,
    lang: &str,
    overrides: &NgramOverrides,
    seed: u64,
    out_dir: &Path,
    config_hash: &str,
) -> Result<(NgramStageReport, StepSummary)> {
    create_dir(out_dir)?;
    let (mut tok, mut cfg) = preset_for_language(lang);
    let o = overrides;
    tok.mode = o.mode.unwrap_or(tok.mode);
    tok.ngram_order = o.ngram_order.unwrap_or(tok.ngram_order);
    tok.min_count = o.min_count.unwrap_or(tok.min_count);
    tok.lowercase = o.lowercase.unwrap_or(tok.lowercase);
    cfg.epochs = o.epochs.unwrap_or(cfg.epochs);
    cfg.lr = o.lr.unwrap_or(cfg.lr);
    cfg.dim = o.dim.unwrap_or(cfg.dim);
    cfg.bucket_count = o.bucket_count.unwrap_or(cfg.bucket_count);
    cfg.seed = seed;

    let samples = load_labeled(train)?;
    let (model, train_report) = train_ngram(&samples, tok, cfg)?;
    let heldout_accuracy = match heldout {
        Some(p) => {
            let held = load_labeled(p)?;
            let mut scorer = model.scorer();
            let correct = held.iter().filter(|s| (scorer.score(&s.text) >= 0.5) == (s.label == Label::Positive)).count();
            (!held.is_empty()).then(|| correct as f64 / held.len() as f64)
        }
        None => None,
    };
    let model_path = out_dir.join("model.ngqf");
    ngram_model::save(&model, config_hash, &model_path)?;
    let report = NgramStageReport { vocab: model.vocab.len(), train: train_report, heldout_accuracy, config_hash: config_hash.into() };
    let report_path = out_dir.join("train-report.json");
    write_json(&report_path, &report)?;
    Ok((report, StepSummary { outputs: vec![model_path, report_path], docs_in: Some(samples.len() as u64), ..Default::default() }))
}

// --- embeddings ------------------------------------------------------------

/// Reads embedding shards and checks they cover `ids`.
pub fn load_embeddings_for<'a>(shards: &[PathBuf], ids: impl IntoIterator<Item = &'a str> + Clone) -> Result<(EmbeddingMatrix, Option<String>)> {
    let (matrix, ext) = embx::read_shards(shards)?;
    let report = align(&matrix, ids);
    if let Some(first) = report.missing.first() {
        return Err(Error::Data(format!("{} documents have no embedding, first {first:?}", report.missing.len())));
    }
    if !report.orphans.is_empty() {
        info!("{} embeddings have no matching document", report.orphans.len());
    }
    Ok((matrix, ext.get(embx::EXT_MODEL).cloned()))
}

fn check_embedding_model(expected: Option<&str>, found: Option<&str>, what: &str) -> Result<()> {
    match (expected, found) {
        (Some(a), Some(b)) if a != b => Err(Error::HashMismatch { what: format!("embedding model of {what}"), expected: a.into(), found: b.into() }),
        _ => Ok(()),
    }
}

/// Settings left unset keep the defaults (6 epochs, lr 3e-4, dropout 0.2, ...).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpOverrides {
    pub hidden_dim: Option<usize>,
    pub epochs: Option<u32>,
    pub lr: Option<f64>,
    pub dropout: Option<f64>,
    pub batch_size: Option<usize>,
    pub weight_decay: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpStageReport {
    pub config: MlpConfig,
    pub train: MlpTrainReport,
    pub heldout_accuracy: Option<f64>,
    pub embedding_model: Option<String>,
    pub config_hash: String,
}

fn examples(samples: &[LabeledSample]) -> Vec<(&str, Label)> {
    samples.iter().map(|s| (s.id.as_str(), s.label)).collect()
}

pub fn run_train_mlp(
    train: &Path,
    heldout: Option<&Path>,
    embeddings: &[PathBuf],
    overrides: &MlpOverrides,
    seed: u64,
    out_dir: &Path,
    config_hash: &str,
) -> Result<(MlpStageReport, StepSummary)> {
    create_dir(out_dir)?;
    let train_samples = load_labeled(train)?;
    let held = heldout.map(load_labeled).transpose()?.unwrap_or_default();
    let ids = train_samples.iter().chain(&held).map(|s| s.id.as_str());
    let (matrix, embedding_model) = load_embeddings_for(embeddings, ids)?;
    let d = MlpConfig::default();
    let o = overrides;
    let config = MlpConfig {
        input_dim: matrix.dim(),
        hidden_dim: o.hidden_dim.unwrap_or(d.hidden_dim),
        epochs: o.epochs.unwrap_or(d.epochs),
        lr: o.lr.unwrap_or(d.lr),
        dropout: o.dropout.unwrap_or(d.dropout),
        batch_size: o.batch_size.unwrap_or(d.batch_size),
        weight_decay: o.weight_decay.unwrap_or(d.weight_decay),
        seed,
        ..d
    };
    let (model, train_report) = train_mlp(&examples(&train_samples), &matrix, config)?;
    let heldout_accuracy = if held.is_empty() { None } else { Some(accuracy(&model, &examples(&held), &matrix)?) };
    let model_path = out_dir.join("model.mlpq");
    mlp_model::save(&model, config_hash, embedding_model.as_deref(), &model_path)?;
    let report = MlpStageReport { config, train: train_report, heldout_accuracy, embedding_model, config_hash: config_hash.into() };
    let report_path = out_dir.join("train-report.json");
    write_json(&report_path, &report)?;
    Ok((report, StepSummary { outputs: vec![model_path, report_path], docs_in: Some(train_samples.len() as u64), ..Default::default() }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefsReport {
    pub requested_k: usize,
    pub used: usize,
    pub positives: usize,
    pub skipped_zero_norm: usize,
    pub config_hash: String,
}

pub fn run_build_refs(train: &Path, embeddings: &[PathBuf], k: Option<usize>, seed: u64, out_dir: &Path, config_hash: &str) -> Result<(RefsReport, StepSummary)> {
    create_dir(out_dir)?;
    let positives: Vec<LabeledSample> = load_labeled(train)?.into_iter().filter(|s| s.label == Label::Positive).collect();
    let (matrix, model_tag) = load_embeddings_for(embeddings, positives.iter().map(|s| s.id.as_str()))?;
    let index = matrix.index();
    let mut pos = EmbeddingMatrix::new(matrix.dim());
    for s in &positives {
        pos.push(s.id.clone(), matrix.row(index[s.id.as_str()]))?;
    }
    let k = k.unwrap_or(DEFAULT_K);
    let refs = build_reference_set(&pos, k, seed)?;
    if refs.skipped_zero_norm > 0 {
        warn!("skipped {} zero-norm positive embeddings", refs.skipped_zero_norm);
    }
    let mut ext = embx::Extensions::new();
    ext.insert(embx::EXT_CONFIG_HASH.into(), config_hash.into());
    if let Some(m) = model_tag {
        ext.insert(embx::EXT_MODEL.into(), m);
    }
    let refs_path = out_dir.join("refs.embx");
    embx::save_refs(&refs, ext, &refs_path)?;
    let report = RefsReport {
        requested_k: k,
        used: refs.len(),
        positives: positives.len(),
        skipped_zero_norm: refs.skipped_zero_norm,
        config_hash: config_hash.into(),
    };
    let report_path = out_dir.join("refs-report.json");
    write_json(&report_path, &report)?;
    Ok((report, StepSummary { outputs: vec![refs_path, report_path], docs_in: Some(positives.len() as u64), ..Default::default() }))
}

// --- scoring ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub scorer: String,
    pub docs: usize,
    /// Documents whose zero-norm embedding was given the minimum score.
    pub zero_norm_ids: Vec<String>,
    /// Config hash of the model that produced the scores.
    pub model_config_hash: String,
    pub config_hash: String,
}

/// Config hash embedded in a model file.
pub fn model_config_hash(path: &Path) -> Result<String> {
    Ok(match ModelKind::detect(path)? {
        ModelKind::Ngram => ngram_model::load(path)?.1,
        ModelKind::Mlp => mlp_model::load(path)?.config_hash,
        ModelKind::Cosine => embx::peek(path)?.1.get(embx::EXT_CONFIG_HASH).cloned().unwrap_or_default(),
    })
}

const SCORE_BATCH: usize = 1 << 16;

pub fn run_score(model: &Path, corpus: &[PathBuf], embeddings: &[PathBuf], out_dir: &Path, config_hash: &str) -> Result<(ScoreReport, StepSummary)> {
    create_dir(out_dir)?;
    let kind = ModelKind::detect(model)?;
    let scorer = kind.scorer_name();
    let manifest = scan_manifest(corpus)?;
    let (table, zero_norm_ids, model_hash) = match kind {
        ModelKind::Ngram => {
            let (m, h) = ngram_model::load(model)?;
            let mut table = curate_core::select::ScoreTable::new(scorer, config_hash);
            let mut batch = Vec::with_capacity(SCORE_BATCH);
            for p in corpus {
                for d in read_documents(p)? {
                    batch.push(d?);
                    if batch.len() == SCORE_BATCH {
                        table.entries.extend(score_ngram(&m, &batch, scorer, config_hash).entries);
                        batch.clear();
                    }
                }
            }
            table.entries.extend(score_ngram(&m, &batch, scorer, config_hash).entries);
            (table, Vec::new(), h)
        }
        ModelKind::Mlp | ModelKind::Cosine => {
            let ids = corpus_ids(corpus)?;
            let (matrix, emb_model) = load_embeddings_for(embeddings, ids.iter().map(String::as_str))?;
            let (table, zero, h) = if kind == ModelKind::Mlp {
                let f = mlp_model::load(model)?;
                check_embedding_model(f.embedding_model.as_deref(), emb_model.as_deref(), "scored corpus")?;
                (score_mlp(&f.model, &matrix, scorer, config_hash)?, Vec::new(), f.config_hash)
            } else {
                let (refs, ext) = embx::load_refs(model)?;
                check_embedding_model(ext.get(embx::EXT_MODEL).map(String::as_str), emb_model.as_deref(), "scored corpus")?;
                let run = score_cosine(&refs, &matrix, scorer, config_hash)?;
                if !run.zero_norm_ids.is_empty() {
                    warn!("{} documents have zero-norm embeddings and score -1", run.zero_norm_ids.len());
                }
                (run.table, run.zero_norm_ids, ext.get(embx::EXT_CONFIG_HASH).cloned().unwrap_or_default())
            };
            let zero_set: std::collections::HashSet<&str> = zero.iter().map(String::as_str).collect();
            let zero_in_order = ids.iter().filter(|id| zero_set.contains(id.as_str())).cloned().collect();
            (align_to_corpus(&table, ids.iter().map(String::as_str))?, zero_in_order, h)
        }
    };
    let scores_path = out_dir.join("scores.tsv");
    write_scores(&table, &scores_path)?;
    let report = ScoreReport { scorer: scorer.into(), docs: table.len(), zero_norm_ids, model_config_hash: model_hash, config_hash: config_hash.into() };
    let report_path = out_dir.join("score-report.json");
    write_json(&report_path, &report)?;
    let summary = StepSummary { outputs: vec![scores_path, report_path], ..Default::default() }.with_input(&manifest);
    Ok((report, summary))
}

fn corpus_ids(corpus: &[PathBuf]) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for p in corpus {
        for d in read_documents(p)? {
            ids.push(d?.id);
        }
    }
    Ok(ids)
}

// --- selection -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    #[serde(flatten)]
    pub report: PlanReport,
    pub config_hash: String,
}

pub fn run_plan(scores: &Path, retention: Retention, corpus: &[PathBuf], out: &Path, config_hash: &str) -> Result<PlanFile> {
    let table = read_scores(scores)?;
    let report = plan_for_corpus(&table, retention, corpus)?;
    let file = PlanFile { report, config_hash: config_hash.into() };
    write_json(out, &file)?;
    Ok(file)
}

pub fn load_plan(path: &Path) -> Result<SelectionPlan> {
    Ok(read_json::<PlanFile>(path)?.report.plan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterFile {
    pub stats: FilterStats,
    pub fraction: f64,
    pub threshold: f64,
    pub scorer: String,
    pub config_hash: String,
}

pub fn run_filter(plan: &SelectionPlan, corpus: &[PathBuf], out_docs: &Path, out_stats: &Path, config_hash: &str) -> Result<(FilterFile, StepSummary)> {
    let report = filter_files(corpus, plan, out_docs)?;
    let manifest = finish_corpus(report.manifest, config_hash)?;
    let file = FilterFile {
        stats: report.stats,
        fraction: plan.fraction,
        threshold: plan.threshold,
        scorer: plan.scorer.clone(),
        config_hash: config_hash.into(),
    };
    write_json(out_stats, &file)?;
    let s = &file.stats;
    let summary = StepSummary {
        outputs: vec![out_docs.into(), out_stats.into()],
        docs_in: Some(s.input_docs as u64),
        tokens_in: Some(s.input_tokens),
        ..Default::default()
    }
    .with_output(&manifest);
    Ok((file, summary))
}

/// Plans and filters in one step, as the pipeline's `select` stage does.
pub fn run_select(scores: &Path, retention: Retention, corpus: &[PathBuf], out_dir: &Path, config_hash: &str) -> Result<(FilterFile, StepSummary)> {
    create_dir(out_dir)?;
    let plan_path = out_dir.join("plan.json");
    let plan = run_plan(scores, retention, corpus, &plan_path, config_hash)?;
    let (file, mut summary) = run_filter(&plan.report.plan, corpus, &out_dir.join("filtered.docs.jsonl"), &out_dir.join("filter-stats.json"), config_hash)?;
    summary.outputs.insert(1, plan_path);
    Ok((file, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixFile {
    pub stats: MixStats,
    pub seed: u64,
    pub config_hash: String,
}

pub fn run_mix(filtered: &Path, raw: &[PathBuf], rate: f64, seed: u64, out_dir: &Path, config_hash: &str) -> Result<(MixFile, StepSummary)> {
    create_dir(out_dir)?;
    let out_docs = out_dir.join("mixed.docs.jsonl");
    let report = mix_files(filtered, raw, rate, seed, &out_docs)?;
    let manifest = finish_corpus(report.manifest, config_hash)?;
    let file = MixFile { stats: report.stats, seed, config_hash: config_hash.into() };
    let stats_path = out_dir.join("mix-stats.json");
    write_json(&stats_path, &file)?;
    let summary = StepSummary { outputs: vec![out_docs, stats_path], ..Default::default() }.with_output(&manifest);
    Ok((file, summary))
}

// --- decontamination -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecontFile {
    #[serde(flatten)]
    pub report: curate_core::decont::DecontReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<IndexBuildReport>,
    pub config_hash: String,
}

/// Where the benchmark n-grams come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSource {
    Benchmarks { sources: Vec<BenchmarkSource>, n: usize },
    File(PathBuf),
}

pub fn run_build_index(sources: &[BenchmarkSource], n: usize, out: &Path) -> Result<IndexBuildReport> {
    let (index, report) = build_index_from_files(sources, n)?;
    ngram_index::save(&index, out)?;
    Ok(report)
}

pub fn run_decontaminate(source: &IndexSource, inputs: &[PathBuf], out_dir: &Path, config_hash: &str) -> Result<(DecontFile, StepSummary)> {
    create_dir(out_dir)?;
    let mut outputs = Vec::new();
    let (index, build) = match source {
        IndexSource::Benchmarks { sources, n } => {
            let (index, report) = build_index_from_files(sources, *n)?;
            let p = out_dir.join("index.ngix");
            ngram_index::save(&index, &p)?;
            outputs.push(p);
            (index, Some(report))
        }
        IndexSource::File(p) => (ngram_index::load(p)?, None),
    };
    let out_docs = out_dir.join("clean.docs.jsonl");
    let (report, manifest) = decontaminate_files(inputs, &index, &out_docs)?;
    let manifest = finish_corpus(manifest, config_hash)?;
    let file = DecontFile { report, index: build, config_hash: config_hash.into() };
    let report_path = out_dir.join("decont-report.json");
    write_json(&report_path, &file)?;
    outputs.push(out_docs);
    outputs.push(report_path);
    let summary = StepSummary {
        outputs,
        docs_in: Some(file.report.total_docs as u64),
        ..Default::default()
    }
    .with_output(&manifest);
    Ok((file, summary))
}

// --- analytics -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub length: LengthStats,
    pub unit: String,
}

pub fn run_stats(corpus: &[PathBuf], out: &Path) -> Result<StatsFile> {
    let file = StatsFile { length: corpus_length_stats(corpus)?, unit: "whitespace_tokens".into() };
    write_json(out, &file)?;
    Ok(file)
}

pub fn run_rank(metrics: &Path, direction: Direction, out_json: &Path, out_csv: &Path) -> Result<Vec<RankRow>> {
    let table = read_metric_table(metrics, direction)?;
    let rows = rank_table(&table)?;
    write_json(out_json, &rows)?;
    write_ranks_csv(&rows, out_csv)?;
    Ok(rows)
}

pub fn run_report(
    baseline: (&str, &[PathBuf]),
    runs: &[(String, Vec<PathBuf>)],
    metrics: Option<(&Path, Direction)>,
    out_dir: &Path,
) -> Result<StepSummary> {
    create_dir(out_dir)?;
    let table = metrics.map(|(p, d)| read_metric_table(p, d)).transpose()?;
    let c = compare_filters(baseline, runs, table.as_ref())?;
    let json = out_dir.join("comparison.json");
    let csv = out_dir.join("comparison.csv");
    write_comparison(&c, &json, &csv)?;
    Ok(StepSummary { outputs: vec![json, csv], ..Default::default() })
}
