use std::fs;
use std::path::Path;

use curate::formats::{embx, mlp_model, ngram_index, ngram_model};
use curate::scores::{read_scores, write_scores};
use curate::Error;
use curate_core::cosine::build_reference_set;
use curate_core::decont::build_index;
use curate_core::embedding::EmbeddingMatrix;
use curate_core::mlp::{MlpConfig, MlpModel};
use curate_core::ngram::{train_ngram, NgramTokenizerConfig, TrainConfig};
use curate_core::select::ScoreTable;
use curate_core::trainset::{Label, LabeledSample};
use curate_core::rng;
use rand::Rng;

fn random_matrix(n: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut r = rng::seeded(seed);
    let mut m = EmbeddingMatrix::new(dim);
    for i in 0..n {
        let row: Vec<f32> = (0..dim).map(|_| r.gen_range(-1e3f32..1e3)).collect();
        m.push(format!("doc-{i}"), &row).unwrap();
    }
    m
}

fn tagged(model: &str) -> embx::Extensions {
    let mut e = embx::Extensions::new();
    e.insert(embx::EXT_MODEL.into(), model.into());
    e
}

#[test]
fn embx_round_trip_is_bit_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("a.embx");
    let mut m = random_matrix(300, 768, 1);
    m.push("subnormal".into(), &vec![f32::MIN_POSITIVE / 4.0; 768]).unwrap();
    m.push("zeros".into(), &vec![-0.0; 768]).unwrap();
    let s = embx::write_matrix(&m, tagged("enc-a"), &p).unwrap();
    assert_eq!((s.dim, s.count), (768, 302));
    let (back, ext) = embx::read_matrix(&p).unwrap();
    assert_eq!(back.ids(), m.ids());
    let bits = |x: &EmbeddingMatrix| x.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&m));
    assert_eq!(ext["model"], "enc-a");
    let (peek, _) = embx::peek(&p).unwrap();
    assert_eq!(peek, s);
    let header = 5 + 4 + 8 + 4 + r#"{"model":"enc-a"}"#.len();
    let ids: usize = m.ids().iter().map(|i| 4 + i.len()).sum();
    assert_eq!(fs::metadata(&p).unwrap().len() as usize, header + ids + 302 * 768 * 4);

    let mut rd = embx::EmbxReader::open(&p).unwrap();
    let mut n = 0;
    while let Some((id, row)) = rd.next_row().unwrap() {
        assert_eq!(row, m.row(n), "{id}");
        n += 1;
    }
    assert_eq!(n, 302);
}

#[test]
fn embx_rejects_bad_files() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("a.embx");
    embx::write_matrix(&random_matrix(4, 8, 2), tagged("enc"), &p).unwrap();
    let good = fs::read(&p).unwrap();

    let bad = tmp.path().join("bad.embx");
    let mut b = good.clone();
    b[0] = b'X';
    fs::write(&bad, &b).unwrap();
    assert!(matches!(embx::read_matrix(&bad), Err(Error::BadMagic { .. })));

    fs::write(&bad, &good[..good.len() - 3]).unwrap();
    assert!(matches!(embx::read_matrix(&bad), Err(Error::Truncated { .. })));
    fs::write(&bad, &good[..20]).unwrap();
    assert!(matches!(embx::read_matrix(&bad), Err(Error::Truncated { .. })));

    let mut b = good.clone();
    b.push(0);
    fs::write(&bad, &b).unwrap();
    assert!(embx::read_matrix(&bad).is_err());

    let mut b = good.clone();
    let n = b.len();
    b[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
    fs::write(&bad, &b).unwrap();
    assert!(matches!(embx::read_matrix(&bad), Err(Error::Core(curate_core::Error::NonFinite(_)))));

    let mut w = embx::EmbxWriter::create(&bad, 768, tagged("enc")).unwrap();
    assert!(matches!(w.write_row("short", &[0.0; 767]), Err(Error::Data(_))));
    assert!(w.write_row("inf", &[f32::INFINITY; 768]).is_err());
    w.write_row("x", &[0.5; 768]).unwrap();
    assert!(matches!(w.write_row("x", &[0.5; 768]), Err(Error::DuplicateId { .. })));

    // duplicate id written by hand
    let mut raw = b"EMBX1".to_vec();
    raw.extend(1u32.to_le_bytes());
    raw.extend(2u64.to_le_bytes());
    raw.extend(2u32.to_le_bytes());
    raw.extend(b"{}");
    for _ in 0..2 {
        raw.extend(1u32.to_le_bytes());
        raw.push(b'a');
    }
    raw.extend([0u8; 8]);
    fs::write(&bad, &raw).unwrap();
    assert!(matches!(embx::read_matrix(&bad), Err(Error::DuplicateId { line: 2, .. })));
}

#[test]
fn shards_must_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let full = random_matrix(10, 8, 3);
    let (a, b, c) = (tmp.path().join("a.embx"), tmp.path().join("b.embx"), tmp.path().join("c.embx"));
    let half = |lo: usize, hi: usize| {
        EmbeddingMatrix::from_parts(8, full.ids()[lo..hi].to_vec(), full.data()[lo * 8..hi * 8].to_vec()).unwrap()
    };
    embx::write_matrix(&half(0, 6), tagged("enc"), &a).unwrap();
    embx::write_matrix(&half(6, 10), tagged("enc"), &b).unwrap();
    let (joined, _) = embx::read_shards(&[a.clone(), b.clone()]).unwrap();
    assert_eq!(joined, full);

    embx::write_matrix(&half(6, 10), tagged("other"), &c).unwrap();
    assert!(matches!(embx::read_shards(&[a.clone(), c.clone()]), Err(Error::Format { .. })));
    embx::write_matrix(&random_matrix(2, 4, 9), tagged("enc"), &c).unwrap();
    assert!(embx::read_shards(&[a.clone(), c.clone()]).is_err());
    assert!(embx::read_shards(&[a.clone(), a.clone()]).is_err());

    let mut ext = tagged("enc");
    ext.insert(embx::EXT_CONFIG_HASH.into(), "h1".into());
    embx::write_matrix(&half(0, 6), ext.clone(), &a).unwrap();
    ext.insert(embx::EXT_CONFIG_HASH.into(), "h2".into());
    embx::write_matrix(&half(6, 10), ext, &b).unwrap();
    assert!(matches!(embx::read_shards(&[a, b]), Err(Error::HashMismatch { .. })));
    assert!(embx::read_shards(&[]).is_err());
}

#[test]
fn reference_sets_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("refs.embx");
    let m = random_matrix(50, 16, 4);
    let refs = build_reference_set(&m, 20, 11).unwrap();
    embx::save_refs(&refs, tagged("enc"), &p).unwrap();
    let (back, ext) = embx::load_refs(&p).unwrap();
    assert_eq!(back, refs);
    assert_eq!(ext["model"], "enc");
    embx::write_matrix(&m, tagged("enc"), &p).unwrap();
    assert!(embx::load_refs(&p).is_err());
}

fn toy_samples() -> Vec<LabeledSample> {
    let mut v = Vec::new();
    for i in 0..40 {
        v.push(LabeledSample::new(format!("p{i}"), format!("alpha beta gamma {i}"), Label::Positive, "s"));
        v.push(LabeledSample::new(format!("n{i}"), format!("delta epsilon zeta {i}"), Label::Negative, "s"));
    }
    v
}

#[test]
fn ngram_model_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("m.ngqf");
    let cfg = TrainConfig { dim: 8, bucket_count: 1 << 12, seed: 5, ..TrainConfig::default() };
    let (model, _) = train_ngram(&toy_samples(), NgramTokenizerConfig::default(), cfg).unwrap();
    ngram_model::save(&model, "abc123", &p).unwrap();
    let (back, hash) = ngram_model::load(&p).unwrap();
    assert_eq!(back, model);
    assert_eq!(hash, "abc123");
    assert_eq!(back.score("alpha beta"), model.score("alpha beta"));

    let bytes = fs::read(&p).unwrap();
    fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(ngram_model::load(&p), Err(Error::Truncated { .. })));
    fs::write(&p, b"MLPQ1....").unwrap();
    assert!(matches!(ngram_model::load(&p), Err(Error::BadMagic { .. })));
}

#[test]
fn mlp_model_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("m.mlpq");
    let model = MlpModel::init(MlpConfig { input_dim: 12, hidden_dim: 5, seed: 3, ..MlpConfig::default() });
    mlp_model::save(&model, "h", Some("enc-a"), &p).unwrap();
    let f = mlp_model::load(&p).unwrap();
    assert_eq!(f.model, model);
    assert_eq!((f.config_hash.as_str(), f.embedding_model.as_deref()), ("h", Some("enc-a")));
    mlp_model::save(&model, "h", None, &p).unwrap();
    assert_eq!(mlp_model::load(&p).unwrap().embedding_model, None);
    let bytes = fs::read(&p).unwrap();
    fs::write(&p, &bytes[..bytes.len() - 1]).unwrap();
    assert!(mlp_model::load(&p).is_err());
}

#[test]
fn ngram_index_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("i.ngix");
    let text = (0..30).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
    let (index, _) = build_index([("a", text.as_str()), ("b", &text[10..])], 13).unwrap();
    ngram_index::save(&index, &p).unwrap();
    assert_eq!(ngram_index::load(&p).unwrap(), index);
    fs::write(&p, b"NGIX1").unwrap();
    assert!(ngram_index::load(&p).is_err());
}

fn malformed_line(p: &Path) -> usize {
    match read_scores(p) {
        Err(Error::Malformed { line, .. }) => line,
        other => panic!("{other:?}"),
    }
}

#[test]
fn score_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("s.tsv");
    let mut t = ScoreTable::new("ngram", "ff00");
    for (i, s) in [0.1, 1.0 / 3.0, -0.0, 1e-300, 0.9999999999999999].iter().enumerate() {
        t.push(format!("d{i}"), *s);
    }
    write_scores(&t, &p).unwrap();
    assert!(fs::read_to_string(&p).unwrap().starts_with("#scorer=ngram\tconfig=ff00\nd0\t0.1\n"));
    let back = read_scores(&p).unwrap();
    assert_eq!(back, t);

    fs::write(&p, "d0\t0.5\n").unwrap();
    assert_eq!(malformed_line(&p), 1);
    fs::write(&p, "#scorer=x\tconfig=y\na\t0.5\nb 0.5\n").unwrap();
    assert_eq!(malformed_line(&p), 3);
    fs::write(&p, "#scorer=x\tconfig=y\na\t0.5\nb\t0.5\nc\tabc\n").unwrap();
    assert_eq!(malformed_line(&p), 4);
    fs::write(&p, "#scorer=x\tconfig=y\na\t0.5\na\t0.6\n").unwrap();
    assert!(read_scores(&p).is_err());
    fs::write(&p, "#scorer=x\tconfig=y\na\tNaN\n").unwrap();
    assert!(read_scores(&p).is_err());

    let mut t = ScoreTable::new("ngram", "h");
    t.push("has\ttab", 0.5);
    assert!(write_scores(&t, &p).is_err());
}
