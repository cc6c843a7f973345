mod support;

use std::fs;
use std::path::Path;

use curate::config::{parse_config, PipelineConfig};
use curate::corpus::{load_documents, scan_manifest, CorpusManifest};
use curate::formats::embx;
use curate::pipeline::{dry_run, run_pipeline, EmbedRequest, StageRecord, StageStatus, MANIFEST_FILE, STAGE_FILE};
use curate::Error;
use support::*;

fn config(t: &Toy, work: &Path, seed: u64) -> PipelineConfig {
    parse_config(&toy_config(t, work, seed), &t.dir, None, &|_| None).unwrap()
}

#[test]
fn checked_in_embeddings_match_generator() {
    let tmp = tempfile::tempdir().unwrap();
    let fresh = tmp.path().join("toy.embx");
    write_toy_embeddings(&fresh);
    if std::env::var_os("CURATE_REGENERATE_FIXTURES").is_some() {
        fs::create_dir_all(data_dir()).unwrap();
        fs::copy(&fresh, fixture_embeddings()).unwrap();
    }
    assert_eq!(fs::read(&fresh).unwrap(), fs::read(fixture_embeddings()).unwrap());
    let (m, ext) = embx::read_matrix(&fixture_embeddings()).unwrap();
    assert_eq!((m.dim(), m.len()), (EMBED_DIM, CORPUS_DOCS + POSITIVES));
    assert_eq!(ext[embx::EXT_MODEL], EMBED_MODEL);
}

#[test]
fn full_run_then_rerun_skips() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = write_toy(&tmp.path().join("in"));
    let cfg = config(&toy, &tmp.path().join("work"), 7);
    let m = run_pipeline(&cfg).unwrap();
    assert_eq!(m.stages.len(), 13);
    assert!(m.stages.iter().all(|s| s.status == StageStatus::Executed), "{:?}", m.stages);

    // manifest token counts agree with the corpus-io manifests
    let corpus = scan_manifest(std::slice::from_ref(&toy.corpus)).unwrap();
    assert_eq!(corpus.doc_count, CORPUS_DOCS as u64);
    for name in ["select-ngram", "select-mlp", "select-cos", "decont", "mix"] {
        let rec = m.record(name).unwrap();
        let out = rec.summary.outputs.iter().find(|p| p.to_string_lossy().ends_with(".docs.jsonl")).unwrap();
        let sidecar = CorpusManifest::load(&CorpusManifest::sidecar(out)).unwrap();
        assert_eq!(rec.summary.docs_out, Some(sidecar.doc_count), "{name}");
        assert_eq!(rec.summary.tokens_out, Some(sidecar.total_ws_tokens), "{name}");
        let docs = load_documents(out).unwrap();
        assert_eq!(docs.len() as u64, sidecar.doc_count);
        assert_eq!(docs.iter().map(|d| d.ws_tokens() as u64).sum::<u64>(), sidecar.total_ws_tokens);
        if name != "decont" && name != "mix" {
            assert_eq!(rec.summary.docs_in, Some(corpus.doc_count), "{name}");
            assert_eq!(rec.summary.tokens_in, Some(corpus.total_ws_tokens), "{name}");
        }
    }
    assert_eq!(m.record("select-ngram").unwrap().summary.docs_out, Some(100));
    let mix = m.record("mix").unwrap().summary.docs_out.unwrap();
    assert_eq!(mix, 105);

    // trainset: 30 of 300 positives rejected, 250 sampled per class
    let report: serde_json::Value = serde_json::from_slice(&fs::read(cfg.stage_dir("trainset").join("trainset-report.json")).unwrap()).unwrap();
    assert_eq!(report["sources"][0]["rejected_unk"], 30);
    assert_eq!(report["sources"][0]["rejection_rate"], 0.1);
    assert_eq!((report["positives"].as_u64(), report["negatives"].as_u64()), (Some(250), Some(250)));

    // negatives are drawn from the corpus, which also holds quality docs,
    // so held-out accuracy is bounded; the corpus ranking is what matters
    for model in ["ngram", "mlp"] {
        let r: serde_json::Value = serde_json::from_slice(&fs::read(cfg.stage_dir(model).join("train-report.json")).unwrap()).unwrap();
        assert!(r["heldout_accuracy"].as_f64().unwrap() >= 0.6, "{model}: {r}");
    }
    let is_quality = |id: &str| id[3..].parse::<usize>().unwrap() % 5 < 2;
    for name in ["select-ngram", "select-mlp", "select-cos"] {
        let kept = load_documents(cfg.stage_dir(name).join("filtered.docs.jsonl")).unwrap();
        let quality = kept.iter().filter(|d| is_quality(&d.id)).count();
        assert!(quality as f64 >= 0.9 * kept.len() as f64, "{name}: {quality} of {}", kept.len());
    }
    let kept = load_documents(cfg.stage_dir("select-cos").join("filtered.docs.jsonl")).unwrap();
    let decont: serde_json::Value = serde_json::from_slice(&fs::read(cfg.stage_dir("decont").join("decont-report.json")).unwrap()).unwrap();
    let in_cos = CONTAMINATED.iter().filter(|i| kept.iter().any(|d| d.id == format!("web{:04}", i))).count();
    assert_eq!(decont["removed_docs"].as_u64(), Some(in_cos as u64), "{decont}");

    assert!(dry_run(&cfg).iter().all(|(_, a)| *a == "skip"));
    let before = snapshot(&cfg.work_dir);
    let again = run_pipeline(&cfg).unwrap();
    assert!(again.stages.iter().all(|s| s.status == StageStatus::Skipped));
    let after = snapshot(&cfg.work_dir);
    for (k, v) in &before {
        if !k.ends_with(MANIFEST_FILE) {
            assert_eq!(Some(v), after.get(k), "{k}");
        }
    }
    for (a, b) in m.stages.iter().zip(&again.stages) {
        assert_eq!(a.outputs, b.outputs);
    }
}

#[test]
fn seed_change_reruns_trainset() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = write_toy(&tmp.path().join("in"));
    let work = tmp.path().join("work");
    run_pipeline(&config(&toy, &work, 7)).unwrap();
    let cfg = config(&toy, &work, 8);
    let plan = dry_run(&cfg);
    assert!(plan.iter().all(|(n, a)| *a == "run" || n == "report"), "{plan:?}");
    let m = run_pipeline(&cfg).unwrap();
    assert_eq!(m.record("trainset").unwrap().status, StageStatus::Executed);
    assert_eq!(m.record("ngram").unwrap().status, StageStatus::Executed);
    assert_eq!(m.seed, 8);
}

#[test]
fn unrelated_edit_only_reruns_dependents() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = write_toy(&tmp.path().join("in"));
    let work = tmp.path().join("work");
    run_pipeline(&config(&toy, &work, 7)).unwrap();
    let text = toy_config(&toy, &work, 7).replace("rate = 0.05", "rate = 0.10");
    let cfg = parse_config(&text, &toy.dir, None, &|_| None).unwrap();
    let m = run_pipeline(&cfg).unwrap();
    for s in &m.stages {
        let expect = if s.name == "mix" || s.name == "report" { StageStatus::Executed } else { StageStatus::Skipped };
        assert_eq!(s.status, expect, "{}", s.name);
    }
    assert_eq!(m.record("mix").unwrap().summary.docs_out, Some(111));
}

#[test]
fn two_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = write_toy(&tmp.path().join("in"));
    let work = tmp.path().join("work");
    let cfg = config(&toy, &work, 3);
    run_pipeline(&cfg).unwrap();
    let first = snapshot(&work);
    fs::remove_dir_all(&work).unwrap();
    run_pipeline(&cfg).unwrap();
    let second = snapshot(&work);
    assert_eq!(first.keys().collect::<Vec<_>>(), second.keys().collect::<Vec<_>>());
    for (k, a) in &first {
        let b = &second[k];
        if k.ends_with(MANIFEST_FILE) || k.ends_with(STAGE_FILE) {
            assert_eq!(strip_durations(a), strip_durations(b), "{k}");
        } else {
            assert_eq!(a, b, "{k}");
        }
    }
}

#[test]
fn missing_embeddings_produce_a_request() {
    let tmp = tempfile::tempdir().unwrap();
    let mut toy = write_toy(&tmp.path().join("in"));
    toy.embeddings = tmp.path().join("emb").join("toy.embx");
    let cfg = config(&toy, &tmp.path().join("work"), 7);
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    let Error::EmbeddingsRequired { request } = &err else { panic!("{err}") };
    let req: EmbedRequest = serde_json::from_slice(&fs::read(request).unwrap()).unwrap();
    assert_eq!(req.stage, "mlp");
    assert_eq!(req.missing, vec![toy.embeddings.clone()]);
    assert!(req.texts[0].ends_with("train.docs.jsonl"));
    assert!(req.texts.iter().all(|p| p.exists()));

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(cfg.work_dir.join(MANIFEST_FILE)).unwrap()).unwrap();
    let statuses: Vec<&str> = manifest["stages"].as_array().unwrap().iter().map(|s| s["status"].as_str().unwrap()).collect();
    assert_eq!(&statuses[..3], ["executed", "executed", "awaiting_embeddings"]);

    // once the embeddings exist the run resumes past the finished stages
    fs::create_dir_all(toy.embeddings.parent().unwrap()).unwrap();
    fs::copy(fixture_embeddings(), &toy.embeddings).unwrap();
    let m = run_pipeline(&cfg).unwrap();
    assert_eq!(m.record("trainset").unwrap().status, StageStatus::Skipped);
    assert_eq!(m.record("mlp").unwrap().status, StageStatus::Executed);
}

#[test]
fn foreign_upstream_artifact_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = write_toy(&tmp.path().join("in"));
    let a = config(&toy, &tmp.path().join("a"), 1);
    let b = config(&toy, &tmp.path().join("b"), 2);
    run_pipeline(&a).unwrap();
    run_pipeline(&b).unwrap();

    // swap in the other run's scores and make the stage record agree with them
    let scores = a.stage_dir("score-ngram").join("scores.tsv");
    fs::copy(b.stage_dir("score-ngram").join("scores.tsv"), &scores).unwrap();
    let rec_path = a.stage_dir("score-ngram").join(STAGE_FILE);
    let mut rec: StageRecord = serde_json::from_slice(&fs::read(&rec_path).unwrap()).unwrap();
    for o in &mut rec.outputs {
        o.sha256 = curate::pipeline::hash_path(&o.path).unwrap();
    }
    fs::write(&rec_path, serde_json::to_vec(&rec).unwrap()).unwrap();

    let err = run_pipeline(&a).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    let Error::Stage { stage, source } = &err else { panic!("{err}") };
    assert_eq!(stage, "select-ngram");
    assert!(matches!(**source, Error::HashMismatch { .. }), "{source}");
}

#[test]
fn embeddings_from_another_model_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = write_toy(&tmp.path().join("in"));
    let work = tmp.path().join("work");
    run_pipeline(&config(&toy, &work, 7)).unwrap();

    let (m, _) = embx::read_matrix(&toy.embeddings).unwrap();
    let other = tmp.path().join("other.embx");
    let mut ext = embx::Extensions::new();
    ext.insert(embx::EXT_MODEL.into(), "another-encoder".into());
    embx::write_matrix(&m, ext, &other).unwrap();
    let text = toy_config(&toy, &work, 7);
    let (head, tail) = text.split_at(text.find("name = \"score-mlp\"").unwrap());
    let tail = tail.replacen(&toy.embeddings.display().to_string(), &other.display().to_string(), 1);
    let cfg = parse_config(&format!("{head}{tail}"), &toy.dir, None, &|_| None).unwrap();
    let err = run_pipeline(&cfg).unwrap_err();
    let Error::Stage { stage, source } = &err else { panic!("{err}") };
    assert_eq!(stage, "score-mlp");
    assert!(matches!(**source, Error::HashMismatch { .. }), "{source}");
}

#[test]
fn failure_records_partial_state() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = write_toy(&tmp.path().join("in"));
    let text = toy_config(&toy, &tmp.path().join("work"), 7).replace("fraction = 0.4", "fraction = 1.5");
    let cfg = parse_config(&text, &toy.dir, None, &|_| None).unwrap();
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 4);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(cfg.work_dir.join(MANIFEST_FILE)).unwrap()).unwrap();
    let st = |n: &str| {
        manifest["stages"].as_array().unwrap().iter().find(|s| s["name"] == n).unwrap()["status"].as_str().unwrap().to_string()
    };
    assert_eq!(st("select-mlp"), "executed");
    assert_eq!(st("select-cos"), "failed");
    assert_eq!(st("decont"), "pending");
}
