use std::collections::HashMap;

use curate_core::fnv::hash_tokens;
use curate_core::ngram::{
    featurize, loss_and_gradients, preset_for_language, train_ngram, NgramTokenizerConfig, TokenMode, TrainConfig, Vocab,
};
use curate_core::rng;
use curate_core::trainset::{Label, LabeledSample};
use rand::Rng;

const COMMON: [&str; 6] = ["the", "and", "of", "to", "in", "is"];

fn toy_doc(r: &mut rng::Rng, prefix: &str) -> String {
    let len = r.gen_range(12..30);
    (0..len)
        .map(|_| {
            if r.gen_bool(0.4) {
                COMMON[r.gen_range(0..COMMON.len())].to_string()
            } else {
                format!("{prefix}{}", r.gen_range(0..40))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn toy_samples(n_each: usize, seed: u64) -> Vec<LabeledSample> {
    let mut r = rng::seeded(seed);
    let mut out = Vec::new();
    for i in 0..n_each {
        out.push(LabeledSample::new(format!("p{i}"), toy_doc(&mut r, "alpha"), Label::Positive, "toy"));
        out.push(LabeledSample::new(format!("n{i}"), toy_doc(&mut r, "beta"), Label::Negative, "toy"));
    }
    out
}

fn small_cfg(seed: u64) -> TrainConfig {
    TrainConfig { dim: 16, bucket_count: 1 << 14, seed, ..TrainConfig::default() }
}

#[test]
fn separable_toy_corpus_heldout_accuracy() {
    let train = toy_samples(1000, 1);
    let heldout = toy_samples(100, 2);
    let (model, report) = train_ngram(&train, NgramTokenizerConfig::default(), small_cfg(3)).unwrap();
    assert!(report.epoch_losses.last().unwrap() < report.epoch_losses.first().unwrap());
    let correct = heldout
        .iter()
        .filter(|s| (model.score(&s.text) >= 0.5) == (s.label == Label::Positive))
        .count();
    let acc = correct as f64 / heldout.len() as f64;
    assert!(acc >= 0.99, "accuracy {acc}");
}

// Bag-of-words logistic regression trained by full-batch gradient descent in f64.
struct LogReg {
    index: HashMap<String, usize>,
    w: Vec<f64>,
    b: f64,
}

impl LogReg {
    fn features(&self, text: &str) -> Vec<(usize, f64)> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for t in &toks {
            if let Some(&i) = self.index.get(*t) {
                *counts.entry(i).or_default() += 1.0 / toks.len() as f64;
            }
        }
        let mut v: Vec<_> = counts.into_iter().collect();
        v.sort_by_key(|p| p.0);
        v
    }

    fn logit(&self, text: &str) -> f64 {
        self.b + self.features(text).iter().map(|&(i, x)| self.w[i] * x).sum::<f64>()
    }

    fn fit(samples: &[LabeledSample]) -> Self {
        let mut index = HashMap::new();
        for s in samples {
            for t in s.text.split_whitespace() {
                let n = index.len();
                index.entry(t.to_string()).or_insert(n);
            }
        }
        let mut m = LogReg { w: vec![0.0; index.len()], index, b: 0.0 };
        let data: Vec<(Vec<(usize, f64)>, f64)> = samples
            .iter()
            .map(|s| (m.features(&s.text), if s.label == Label::Positive { 1.0 } else { 0.0 }))
            .collect();
        for _ in 0..300 {
            let mut gw = vec![0.0; m.w.len()];
            let mut gb = 0.0;
            for (x, y) in &data {
                let z = m.b + x.iter().map(|&(i, v)| m.w[i] * v).sum::<f64>();
                let d = 1.0 / (1.0 + (-z).exp()) - y;
                gb += d;
                for &(i, v) in x {
                    gw[i] += d * v;
                }
            }
            let n = data.len() as f64;
            m.b -= 5.0 * gb / n;
            for (w, g) in m.w.iter_mut().zip(gw) {
                *w -= 5.0 * g / n;
            }
        }
        m
    }
}

#[test]
fn agrees_with_logistic_regression_oracle() {
    let train = toy_samples(500, 11);
    let heldout = toy_samples(100, 12);
    let (model, _) = train_ngram(&train, NgramTokenizerConfig::default(), small_cfg(4)).unwrap();
    let oracle = LogReg::fit(&train);
    let agree = heldout
        .iter()
        .filter(|s| (model.score(&s.text) >= 0.5) == (oracle.logit(&s.text) >= 0.0))
        .count();
    assert!(agree as f64 / heldout.len() as f64 >= 0.98, "agreement {agree}/{}", heldout.len());
}

#[test]
fn probabilities_sum_to_one() {
    let train = toy_samples(200, 5);
    let (model, _) = train_ngram(&train, NgramTokenizerConfig::default(), small_cfg(6)).unwrap();
    let mut scorer = model.scorer();
    let texts = ["", "   ", "unseen words only", "alpha1 beta2 the", "alpha3 alpha3 alpha3 alpha3"];
    for t in texts.iter().map(|s| s.to_string()).chain(toy_samples(50, 7).into_iter().map(|s| s.text)) {
        let p = scorer.probabilities(&t);
        assert!(((p[0] as f64 + p[1] as f64) - 1.0).abs() < 1e-6, "{t:?} {p:?}");
        assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}

#[test]
fn empty_or_unknown_text_scores_one_half() {
    let train = toy_samples(100, 8);
    let tok = NgramTokenizerConfig { ngram_order: 1, ..NgramTokenizerConfig::default() };
    let (model, _) = train_ngram(&train, tok, small_cfg(9)).unwrap();
    assert_eq!(model.score(""), 0.5);
    assert_eq!(model.score("zzz qqq"), 0.5);
}

fn reference_loss(input: &[f64], output: &[f64], dim: usize, feats: &[u32], label: usize) -> f64 {
    let mut h = vec![0.0; dim];
    for &f in feats {
        for d in 0..dim {
            h[d] += input[f as usize * dim + d];
        }
    }
    for x in &mut h {
        *x /= feats.len() as f64;
    }
    let z: Vec<f64> = (0..2).map(|k| (0..dim).map(|d| output[k * dim + d] * h[d]).sum()).collect();
    let m = z[0].max(z[1]);
    let lse = m + ((z[0] - m).exp() + (z[1] - m).exp()).ln();
    lse - z[label]
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

#[test]
fn gradient_matches_central_differences() {
    let mut r = rng::seeded(21);
    let dim = 8;
    let rows = 30;
    let input: Vec<f64> = (0..rows * dim).map(|_| r.gen_range(-0.5..0.5)).collect();
    let output: Vec<f64> = (0..2 * dim).map(|_| r.gen_range(-0.5..0.5)).collect();
    // repeated features exercise the multiplicity term
    let feats = [3u32, 7, 7, 12, 29, 3, 0];
    for label in [0, 1] {
        let g = loss_and_gradients(&input, &output, dim, &feats, label);
        assert!((g.loss - reference_loss(&input, &output, dim, &feats, label)).abs() < 1e-12);
        let h = 1e-6;
        for i in 0..output.len() {
            let mut p = output.clone();
            p[i] += h;
            let up = reference_loss(&input, &p, dim, &feats, label);
            p[i] -= 2.0 * h;
            let down = reference_loss(&input, &p, dim, &feats, label);
            let num = (up - down) / (2.0 * h);
            assert!(rel_err(g.output[i], num) < 1e-4, "output[{i}] {} vs {num}", g.output[i]);
        }
        let mut touched = 0;
        for row in 0..rows as u32 {
            let analytic = g.input_rows.iter().find(|(r, _)| *r == row).map(|(_, v)| v.clone());
            for d in 0..dim {
                let idx = row as usize * dim + d;
                let mut p = input.clone();
                p[idx] += h;
                let up = reference_loss(&p, &output, dim, &feats, label);
                p[idx] -= 2.0 * h;
                let down = reference_loss(&p, &output, dim, &feats, label);
                let num = (up - down) / (2.0 * h);
                let a = analytic.as_ref().map_or(0.0, |v| v[d]);
                if analytic.is_none() {
                    assert!(num.abs() < 1e-9);
                } else {
                    assert!(rel_err(a, num) < 1e-4, "input[{row},{d}] {a} vs {num}");
                    touched += 1;
                }
            }
        }
        assert_eq!(touched, 5 * dim);
    }
}

#[test]
fn hashed_bigram_bucket_matches_reference_fnv() {
    let vocab = Vocab::from_entries([("a".to_string(), 3), ("b".to_string(), 1)]);
    let buckets = 1000u32;
    let toks = ["a", "b", "c"];
    let f = featurize(&toks, &vocab, 2, buckets);
    let bucket = |x: &str, y: &str| {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in format!("{x}\u{241F}{y}").bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        2 + (h % u64::from(buckets)) as u32
    };
    assert_eq!(f, vec![vocab.get("a").unwrap(), vocab.get("b").unwrap(), bucket("a", "b"), bucket("b", "c")]);
    assert_eq!(hash_tokens(&["a", "b"]) % 1000, u64::from(bucket("a", "b") - 2));
}

#[test]
fn min_count_drops_rare_unigrams() {
    let mut samples = toy_samples(50, 13);
    samples.push(LabeledSample::new("rare", "hapax alpha1", Label::Positive, "toy"));
    let tok = NgramTokenizerConfig { min_count: 2, ..NgramTokenizerConfig::default() };
    let (model, _) = train_ngram(&samples, tok, small_cfg(1)).unwrap();
    assert!(model.vocab.get("hapax").is_none());
    assert!(model.vocab.get("alpha1").is_some());
}

#[test]
fn training_is_deterministic_and_seed_sensitive() {
    let train = toy_samples(200, 14);
    let a = train_ngram(&train, NgramTokenizerConfig::default(), small_cfg(15)).unwrap().0;
    let b = train_ngram(&train, NgramTokenizerConfig::default(), small_cfg(15)).unwrap().0;
    let c = train_ngram(&train, NgramTokenizerConfig::default(), small_cfg(16)).unwrap().0;
    assert!(a.input.iter().zip(&b.input).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(a.output.iter().zip(&b.output).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_ne!(a.output, c.output);
}

#[test]
fn unsegmented_scripts_use_character_ngrams() {
    let (tok, cfg) = preset_for_language("cmn_Hani");
    assert_eq!(tok.mode, TokenMode::Character);
    assert_eq!(tok.ngram_order, 4);
    assert_eq!(cfg.epochs, 30);
    let (tok, cfg) = preset_for_language("deu_Latn");
    assert_eq!(tok.mode, TokenMode::Whitespace);
    assert_eq!((tok.ngram_order, tok.min_count, cfg.epochs), (2, 1, 5));

    let mut r = rng::seeded(3);
    let pos = ["天", "地", "玄", "黄", "宇", "宙"];
    let neg = ["买", "卖", "价", "钱", "优", "惠"];
    let mut samples = Vec::new();
    for i in 0..200 {
        let p: String = (0..20).map(|_| pos[r.gen_range(0..6)]).collect();
        let n: String = (0..20).map(|_| neg[r.gen_range(0..6)]).collect();
        samples.push(LabeledSample::new(format!("p{i}"), p, Label::Positive, "toy"));
        samples.push(LabeledSample::new(format!("n{i}"), n, Label::Negative, "toy"));
    }
    let (tok, cfg) = preset_for_language("cmn_Hani");
    let cfg = TrainConfig { dim: 8, bucket_count: 1 << 12, epochs: 5, ..cfg };
    let (model, _) = train_ngram(&samples, tok, cfg).unwrap();
    assert!(model.score("天地玄黄宇宙") > 0.5);
    assert!(model.score("买卖价钱优惠") < 0.5);
}

#[test]
fn rejects_degenerate_training_sets() {
    let only_pos: Vec<_> = toy_samples(5, 1).into_iter().filter(|s| s.label == Label::Positive).collect();
    assert!(train_ngram(&only_pos, NgramTokenizerConfig::default(), small_cfg(0)).is_err());
    assert!(train_ngram(&[], NgramTokenizerConfig::default(), small_cfg(0)).is_err());
    let bad = NgramTokenizerConfig { ngram_order: 0, ..NgramTokenizerConfig::default() };
    assert!(train_ngram(&toy_samples(5, 1), bad, small_cfg(0)).is_err());
}
