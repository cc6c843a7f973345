//! Runs a validated [`PipelineConfig`] stage by stage.
//!
//! Each stage works in `<work_dir>/<stage>/` and records `stage.json` with a
//! hash over its config lineage and the content of its inputs. A stage whose
//! recorded hash matches and whose outputs are unchanged on disk is skipped.
//! `<work_dir>/run-manifest.json` is rewritten after every stage, so a
//! failed run leaves its partial state behind.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Input, PipelineConfig, Stage, StageKind};
use crate::corpus::{read_json, write_json, CorpusManifest};
use crate::error::{Error, Result};
use crate::hash::sha256_file;
use crate::scores::read_scores;
use crate::stages::*;
use crate::trainset::{TrainsetPaths, TrainsetSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Executed,
    Skipped,
    Failed,
    AwaitingEmbeddings,
    /// Not reached because an earlier stage stopped the run.
    Pending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub kind: String,
    pub status: StageStatus,
    pub config_hash: String,
    #[serde(default)]
    pub stage_hash: String,
    #[serde(default)]
    pub inputs: Vec<FileHash>,
    #[serde(default)]
    pub outputs: Vec<FileHash>,
    #[serde(default)]
    pub summary: StepSummary,
    #[serde(default)]
    pub duration_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub language: String,
    pub seed: u64,
    pub config_hash: String,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn record(&self, stage: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == stage)
    }
}

/// Texts that must be embedded before a stage can run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub stage: String,
    /// Document files to embed.
    pub texts: Vec<PathBuf>,
    /// `.embx` files the stage expects. When the two lists have equal
    /// length, `texts[i]` is expected in `embeddings[i]`.
    pub embeddings: Vec<PathBuf>,
    pub missing: Vec<PathBuf>,
}

pub const MANIFEST_FILE: &str = "run-manifest.json";
pub const STAGE_FILE: &str = "stage.json";
pub const EMBED_REQUEST_FILE: &str = "embed-request.json";

/// Content hash of a file or, for a directory, of its files in name order.
pub fn hash_path(path: &Path) -> Result<String> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(Error::io(path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != STAGE_FILE))
            .collect();
        entries.sort();
        let mut h = Sha256::new();
        for e in entries {
            h.update(e.file_name().unwrap().as_encoded_bytes());
            h.update([0]);
            h.update(sha256_file(&e)?.as_bytes());
        }
        Ok(hex::encode(h.finalize()))
    } else {
        sha256_file(path)
    }
}

fn hash_files(paths: &[PathBuf]) -> Result<Vec<FileHash>> {
    paths.iter().map(|p| Ok(FileHash { path: p.clone(), sha256: hash_path(p)? })).collect()
}

fn stage_hash(config_hash: &str, inputs: &[FileHash]) -> String {
    let mut h = Sha256::new();
    h.update(config_hash.as_bytes());
    for i in inputs {
        h.update([0]);
        h.update(i.sha256.as_bytes());
    }
    hex::encode(h.finalize())
}

fn input_paths(cfg: &PipelineConfig, stage: &Stage) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = stage.kind.inputs().into_iter().map(|(_, i)| cfg.resolve(i)).collect();
    if let StageKind::BuildTrainset { positive_sources, .. } = &stage.kind {
        v.extend(positive_sources.iter().map(|s| s.path.clone()));
    }
    if let StageKind::Decontaminate { benchmarks, .. } = &stage.kind {
        v.extend(benchmarks.iter().map(|b| b.path.clone()));
    }
    if let StageKind::Report { metrics: Some(m), .. } = &stage.kind {
        v.push(m.clone());
    }
    v.extend(stage.kind.embeddings().iter().cloned());
    v
}

/// Config hash embedded in an upstream artifact, if it carries one.
fn artifact_config_hash(path: &Path, kind: &StageKind) -> Result<Option<String>> {
    Ok(match kind {
        StageKind::BuildTrainset { .. } => {
            CorpusManifest::load(&CorpusManifest::sidecar(&TrainsetPaths::in_dir(path).train))?.config_hash
        }
        StageKind::TrainNgram { .. } | StageKind::TrainMlp { .. } | StageKind::BuildRefs { .. } => Some(model_config_hash(path)?),
        StageKind::Score { .. } => Some(read_scores(path)?.config_hash),
        StageKind::Select { .. } | StageKind::Mix { .. } | StageKind::Decontaminate { .. } => {
            CorpusManifest::load(&CorpusManifest::sidecar(path))?.config_hash
        }
        StageKind::Report { .. } => None,
    })
}

/// Every stage-produced input must carry the hash its producer was
/// configured with; anything else is a stale or foreign artifact.
fn check_upstream_hashes(cfg: &PipelineConfig, stage: &Stage) -> Result<()> {
    for (_, input) in stage.kind.inputs() {
        let Input::Stage(dep) = input else { continue };
        let producer = cfg.stage(dep).expect("validated");
        let path = cfg.resolve(input);
        let found = artifact_config_hash(&path, &producer.kind)?;
        if found.as_deref() != Some(producer.config_hash.as_str()) {
            return Err(Error::HashMismatch {
                what: path.display().to_string(),
                expected: producer.config_hash.clone(),
                found: found.unwrap_or_else(|| "none".into()),
            });
        }
    }
    Ok(())
}

fn embed_request(cfg: &PipelineConfig, stage: &Stage) -> Option<EmbedRequest> {
    let embeddings = stage.kind.embeddings();
    let missing: Vec<PathBuf> = embeddings.iter().filter(|p| !p.exists()).cloned().collect();
    if missing.is_empty() {
        return None;
    }
    let texts = match &stage.kind {
        StageKind::TrainMlp { trainset, .. } => {
            let p = TrainsetPaths::in_dir(&cfg.resolve(trainset));
            vec![p.train, p.heldout]
        }
        StageKind::BuildRefs { trainset, .. } => vec![TrainsetPaths::in_dir(&cfg.resolve(trainset)).train],
        StageKind::Score { corpus, .. } => cfg.resolve_all(corpus),
        _ => Vec::new(),
    };
    Some(EmbedRequest { stage: stage.name.clone(), texts, embeddings: embeddings.to_vec(), missing })
}

fn execute(cfg: &PipelineConfig, stage: &Stage, dir: &Path) -> Result<StepSummary> {
    let h = stage.config_hash.as_str();
    let seed = cfg.seed;
    let trainset = |t: &Input| TrainsetPaths::in_dir(&cfg.resolve(t));
    Ok(match &stage.kind {
        StageKind::BuildTrainset { positive_sources, negative_corpus, cap_per_class } => {
            let spec = TrainsetSpec {
                lang: cfg.language.clone(),
                positive_sources: positive_sources.clone(),
                negative_corpus: cfg.resolve(negative_corpus),
                cap_per_class: *cap_per_class,
                seed,
            };
            run_build_trainset(&spec, dir, h)?.1
        }
        StageKind::TrainNgram { trainset: t, params } => {
            let p = trainset(t);
            run_train_ngram(&p.train, Some(&p.heldout), &cfg.language, params, seed, dir, h)?.1
        }
        StageKind::TrainMlp { trainset: t, embeddings, params } => {
            let p = trainset(t);
            run_train_mlp(&p.train, Some(&p.heldout), embeddings, params, seed, dir, h)?.1
        }
        StageKind::BuildRefs { trainset: t, embeddings, k } => run_build_refs(&trainset(t).train, embeddings, *k, seed, dir, h)?.1,
        StageKind::Score { model, corpus, embeddings } => run_score(&cfg.resolve(model), &cfg.resolve_all(corpus), embeddings, dir, h)?.1,
        StageKind::Select { scores, corpus, retention } => {
            run_select(&cfg.resolve(scores), *retention, &cfg.resolve_all(corpus), dir, h)?.1
        }
        StageKind::Mix { filtered, raw, rate } => run_mix(&cfg.resolve(filtered), &cfg.resolve_all(raw), *rate, seed, dir, h)?.1,
        StageKind::Decontaminate { input, benchmarks, n, index } => {
            let source = match index {
                Some(i) => IndexSource::File(cfg.resolve(i)),
                None => IndexSource::Benchmarks { sources: benchmarks.clone(), n: *n },
            };
            run_decontaminate(&source, &cfg.resolve_all(input), dir, h)?.1
        }
        StageKind::Report { baseline, runs, metrics, direction } => {
            let base = cfg.resolve_all(baseline);
            let runs: Vec<(String, Vec<PathBuf>)> = runs
                .iter()
                .map(|r| {
                    let name = match r {
                        Input::Stage(s) => s.clone(),
                        Input::Path(p) => p.display().to_string(),
                    };
                    (name, vec![cfg.resolve(r)])
                })
                .collect();
            run_report(("baseline", &base), &runs, metrics.as_deref().map(|m| (m, *direction)), dir)?
        }
    })
}

fn previous(dir: &Path) -> Option<StageRecord> {
    read_json::<StageRecord>(&dir.join(STAGE_FILE)).ok()
}

fn unchanged(prev: &StageRecord, stage_hash: &str) -> bool {
    prev.status == StageStatus::Executed
        && prev.stage_hash == stage_hash
        && prev.outputs.iter().all(|o| hash_path(&o.path).is_ok_and(|h| h == o.sha256))
}

fn pending(stage: &Stage) -> StageRecord {
    StageRecord {
        name: stage.name.clone(),
        kind: stage.kind.name().into(),
        status: StageStatus::Pending,
        config_hash: stage.config_hash.clone(),
        stage_hash: String::new(),
        inputs: Vec::new(),
        outputs: Vec::new(),
        summary: StepSummary::default(),
        duration_ms: 0,
        error: None,
    }
}

/// Plan without executing: which stages would run and which would be
/// skipped given what is on disk now.
pub fn dry_run(cfg: &PipelineConfig) -> Vec<(String, &'static str)> {
    let mut out = Vec::new();
    let mut upstream_changed = std::collections::HashSet::new();
    for s in &cfg.stages {
        let dir = cfg.stage_dir(&s.name);
        let fresh = !s.deps().iter().any(|d| upstream_changed.contains(*d))
            && hash_files(&input_paths(cfg, s))
                .ok()
                .zip(previous(&dir))
                .is_some_and(|(inputs, prev)| unchanged(&prev, &stage_hash(&s.config_hash, &inputs)));
        if !fresh {
            upstream_changed.insert(s.name.clone());
        }
        out.push((s.name.clone(), if fresh { "skip" } else { "run" }));
    }
    out
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunManifest> {
    std::fs::create_dir_all(&cfg.work_dir).map_err(Error::io(&cfg.work_dir))?;
    let mut manifest = RunManifest {
        language: cfg.language.clone(),
        seed: cfg.seed,
        config_hash: cfg.config_hash.clone(),
        stages: cfg.stages.iter().map(pending).collect(),
    };
    let manifest_path = cfg.work_dir.join(MANIFEST_FILE);
    for (i, stage) in cfg.stages.iter().enumerate() {
        let dir = cfg.stage_dir(&stage.name);
        std::fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
        let result = run_stage(cfg, stage, &dir);
        let (record, err) = match result {
            Ok(r) => (r, None),
            Err((r, e)) => (r, Some(e)),
        };
        manifest.stages[i] = record;
        write_json(&manifest_path, &manifest)?;
        if let Some(e) = err {
            return Err(match e {
                e @ Error::EmbeddingsRequired { .. } => e,
                e => Error::Stage { stage: stage.name.clone(), source: Box::new(e) },
            });
        }
    }
    Ok(manifest)
}

#[allow(clippy::result_large_err)]
fn run_stage(cfg: &PipelineConfig, stage: &Stage, dir: &Path) -> std::result::Result<StageRecord, (StageRecord, Error)> {
    let mut record = pending(stage);
    let fail = |mut r: StageRecord, status: StageStatus, e: Error| {
        r.status = status;
        r.error = Some(e.to_string());
        (r, e)
    };
    if let Some(req) = embed_request(cfg, stage) {
        let p = dir.join(EMBED_REQUEST_FILE);
        if let Err(e) = write_json(&p, &req) {
            return Err(fail(record, StageStatus::Failed, e));
        }
        return Err(fail(record, StageStatus::AwaitingEmbeddings, Error::EmbeddingsRequired { request: p }));
    }
    let inputs = match hash_files(&input_paths(cfg, stage)) {
        Ok(i) => i,
        Err(e) => return Err(fail(record, StageStatus::Failed, e)),
    };
    let sh = stage_hash(&stage.config_hash, &inputs);
    record.inputs = inputs;
    record.stage_hash = sh.clone();
    if let Some(prev) = previous(dir).filter(|p| unchanged(p, &sh)) {
        info!("stage {}: unchanged, skipping", stage.name);
        record.outputs = prev.outputs;
        record.summary = prev.summary;
        record.status = StageStatus::Skipped;
        return Ok(record);
    }
    info!("stage {}: running", stage.name);
    let _ = std::fs::remove_file(dir.join(STAGE_FILE));
    let start = Instant::now();
    let outcome = check_upstream_hashes(cfg, stage).and_then(|()| execute(cfg, stage, dir));
    record.duration_ms = start.elapsed().as_millis() as u64;
    let summary = match outcome {
        Ok(s) => s,
        Err(e) => return Err(fail(record, StageStatus::Failed, e)),
    };
    record.outputs = match hash_files(&summary.outputs) {
        Ok(o) => o,
        Err(e) => return Err(fail(record, StageStatus::Failed, e)),
    };
    record.summary = summary;
    record.status = StageStatus::Executed;
    if let Err(e) = write_json(&dir.join(STAGE_FILE), &record) {
        return Err(fail(record, StageStatus::Failed, e));
    }
    Ok(record)
}
