//! Declarative pipeline configuration (TOML).
//!
//! ```toml
//! language = "dan_Latn"
//! seed = 7
//! work_dir = "${RUN_DIR}/dan"      # ${VAR} is replaced from the environment; $$ is a literal $
//!
//! [[stage]]
//! name = "trainset"
//! kind = "build-trainset"
//! negative_corpus = "corpus/dan.docs.jsonl"
//! cap_per_class = 80000
//! positive_sources = [{ name = "aya", path = "pos/aya.jsonl", fields = ["inputs", "targets"] }]
//!
//! [[stage]]
//! name = "ngram"
//! kind = "train-ngram"
//! trainset = "trainset"            # a stage name or a path
//!
//! [[stage]]
//! name = "score"
//! kind = "score"
//! model = "ngram"
//! corpus = ["corpus/dan.docs.jsonl"]
//!
//! [[stage]]
//! name = "select"
//! kind = "select"
//! scores = "score"
//! corpus = ["corpus/dan.docs.jsonl"]
//! target_tokens = 70_000_000_000   # or: fraction = 0.1
//! min_fraction = 0.1
//! ```
//!
//! Stage kinds and their keys:
//!
//! | kind             | keys                                                                   |
//! |------------------|------------------------------------------------------------------------|
//! | `build-trainset` | `positive_sources`, `negative_corpus`, `cap_per_class`                 |
//! | `train-ngram`    | `trainset`, `mode`, `ngram_order`, `min_count`, `lowercase`, `epochs`, `lr`, `dim`, `bucket_count` |
//! | `train-mlp`      | `trainset`, `embeddings`, `hidden_dim`, `epochs`, `lr`, `dropout`, `batch_size`, `weight_decay` |
//! | `build-refs`     | `trainset`, `embeddings`, `k`                                          |
//! | `score`          | `model`, `corpus`, `embeddings`                                        |
//! | `select`         | `scores`, `corpus`, `fraction` or `target_tokens` (+ `min_fraction`)   |
//! | `mix`            | `filtered`, `raw`, `rate`                                              |
//! | `decontaminate`  | `input`, `benchmarks` (+ `n`) or `index`                               |
//! | `report`         | `baseline`, `runs`, `metrics`, `direction`                             |
//!
//! Relative paths resolve against the config file's directory. References to
//! inputs must name an earlier-or-later stage or an existing file;
//! `embeddings` paths may be missing, in which case the run stops with an
//! embedding request.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::path::{Path, PathBuf};

use curate_core::rank::Direction;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::decont::BenchmarkSource;
use crate::error::{Error, Result};
use crate::hash::config_hash;
use crate::selection::Retention;
use crate::stages::{MlpOverrides, NgramOverrides};
use crate::trainset::{PositiveSource, DEFAULT_CAP};

/// An input: another stage's primary output, or a file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Input {
    Stage(String),
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StageKind {
    BuildTrainset { positive_sources: Vec<PositiveSource>, negative_corpus: Input, cap_per_class: usize },
    TrainNgram { trainset: Input, params: NgramOverrides },
    TrainMlp { trainset: Input, embeddings: Vec<PathBuf>, params: MlpOverrides },
    BuildRefs { trainset: Input, embeddings: Vec<PathBuf>, k: Option<usize> },
    Score { model: Input, corpus: Vec<Input>, embeddings: Vec<PathBuf> },
    Select { scores: Input, corpus: Vec<Input>, retention: Retention },
    Mix { filtered: Input, raw: Vec<Input>, rate: f64 },
    Decontaminate { input: Vec<Input>, benchmarks: Vec<BenchmarkSource>, n: usize, index: Option<Input> },
    Report { baseline: Vec<Input>, runs: Vec<Input>, metrics: Option<PathBuf>, direction: Direction },
}

impl StageKind {
    pub fn name(&self) -> &'static str {
        match self {
            StageKind::BuildTrainset { .. } => "build-trainset",
            StageKind::TrainNgram { .. } => "train-ngram",
            StageKind::TrainMlp { .. } => "train-mlp",
            StageKind::BuildRefs { .. } => "build-refs",
            StageKind::Score { .. } => "score",
            StageKind::Select { .. } => "select",
            StageKind::Mix { .. } => "mix",
            StageKind::Decontaminate { .. } => "decontaminate",
            StageKind::Report { .. } => "report",
        }
    }

    /// Every input with the role it plays, used for reference checks.
    pub fn inputs(&self) -> Vec<(Role, &Input)> {
        let mut v = Vec::new();
        match self {
            StageKind::BuildTrainset { negative_corpus, .. } => v.push((Role::Corpus, negative_corpus)),
            StageKind::TrainNgram { trainset, .. } | StageKind::TrainMlp { trainset, .. } | StageKind::BuildRefs { trainset, .. } => {
                v.push((Role::Trainset, trainset))
            }
            StageKind::Score { model, corpus, .. } => {
                v.push((Role::Model, model));
                v.extend(corpus.iter().map(|c| (Role::Corpus, c)));
            }
            StageKind::Select { scores, corpus, .. } => {
                v.push((Role::Scores, scores));
                v.extend(corpus.iter().map(|c| (Role::Corpus, c)));
            }
            StageKind::Mix { filtered, raw, .. } => {
                v.push((Role::Corpus, filtered));
                v.extend(raw.iter().map(|c| (Role::Corpus, c)));
            }
            StageKind::Decontaminate { input, index, .. } => {
                v.extend(input.iter().map(|c| (Role::Corpus, c)));
                if let Some(i) = index {
                    v.push((Role::Index, i));
                }
            }
            StageKind::Report { baseline, runs, .. } => {
                v.extend(baseline.iter().chain(runs).map(|c| (Role::Corpus, c)));
            }
        }
        v
    }

    pub fn embeddings(&self) -> &[PathBuf] {
        match self {
            StageKind::TrainMlp { embeddings, .. } | StageKind::BuildRefs { embeddings, .. } | StageKind::Score { embeddings, .. } => embeddings,
            _ => &[],
        }
    }

    /// Primary output inside the stage directory, used when another stage
    /// references this one.
    pub fn primary_output(&self) -> Option<&'static str> {
        match self {
            StageKind::BuildTrainset { .. } => Some(""),
            StageKind::TrainNgram { .. } => Some("model.ngqf"),
            StageKind::TrainMlp { .. } => Some("model.mlpq"),
            StageKind::BuildRefs { .. } => Some("refs.embx"),
            StageKind::Score { .. } => Some("scores.tsv"),
            StageKind::Select { .. } => Some("filtered.docs.jsonl"),
            StageKind::Mix { .. } => Some("mixed.docs.jsonl"),
            StageKind::Decontaminate { .. } => Some("clean.docs.jsonl"),
            StageKind::Report { .. } => None,
        }
    }

    fn role(&self) -> Option<Role> {
        match self {
            StageKind::BuildTrainset { .. } => Some(Role::Trainset),
            StageKind::TrainNgram { .. } | StageKind::TrainMlp { .. } | StageKind::BuildRefs { .. } => Some(Role::Model),
            StageKind::Score { .. } => Some(Role::Scores),
            StageKind::Select { .. } | StageKind::Mix { .. } | StageKind::Decontaminate { .. } => Some(Role::Corpus),
            StageKind::Report { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Trainset,
    Model,
    Scores,
    Corpus,
    Index,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    #[serde(flatten)]
    pub kind: StageKind,
    /// Hash of this stage's settings and those of every stage it depends
    /// on; embedded in the stage's outputs.
    pub config_hash: String,
}

impl Stage {
    pub fn deps(&self) -> Vec<&str> {
        let mut d: Vec<&str> = self
            .kind
            .inputs()
            .into_iter()
            .filter_map(|(_, i)| match i {
                Input::Stage(s) => Some(s.as_str()),
                Input::Path(_) => None,
            })
            .collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub language: String,
    pub seed: u64,
    pub work_dir: PathBuf,
    pub jobs: Option<usize>,
    /// In execution order.
    pub stages: Vec<Stage>,
    pub config_hash: String,
}

impl PipelineConfig {
    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn stage_dir(&self, name: &str) -> PathBuf {
        self.work_dir.join(name)
    }

    /// Concrete path of an input.
    pub fn resolve(&self, input: &Input) -> PathBuf {
        match input {
            Input::Path(p) => p.clone(),
            Input::Stage(s) => {
                let stage = self.stage(s).expect("references are validated");
                self.stage_dir(s).join(stage.kind.primary_output().unwrap_or(""))
            }
        }
    }

    pub fn resolve_all(&self, inputs: &[Input]) -> Vec<PathBuf> {
        inputs.iter().map(|i| self.resolve(i)).collect()
    }
}

/// Replaces `${VAR}` with the variable's value and `$$` with `$`.
pub fn interpolate(s: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('$') {
        out.push_str(&rest[..i]);
        let tail = &rest[i + 1..];
        if let Some(t) = tail.strip_prefix('$') {
            out.push('$');
            rest = t;
        } else if let Some(t) = tail.strip_prefix('{') {
            let end = t.find('}').ok_or_else(|| Error::Config(format!("unterminated ${{ in {s:?}")))?;
            let var = &t[..end];
            let value = lookup(var).ok_or_else(|| Error::Config(format!("environment variable {var} is not set")))?;
            out.push_str(&value);
            rest = &t[end + 1..];
        } else {
            out.push('$');
            rest = tail;
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn interpolate_value(v: &mut toml::Value, lookup: &dyn Fn(&str) -> Option<String>) -> Result<()> {
    match v {
        toml::Value::String(s) => *s = interpolate(s, lookup)?,
        toml::Value::Array(items) => {
            for i in items {
                interpolate_value(i, lookup)?;
            }
        }
        toml::Value::Table(t) => {
            for (_, i) in t.iter_mut() {
                interpolate_value(i, lookup)?;
            }
        }
        _ => {}
    }
    Ok(())
}

pub fn load_config(path: &Path, seed_override: Option<u64>) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base, seed_override, &|k| std::env::var(k).ok())
}

struct Ctx<'a> {
    base: &'a Path,
    stage_names: &'a HashSet<String>,
}

impl Ctx<'_> {
    fn path(&self, s: &str) -> PathBuf {
        let p = Path::new(s);
        if p.is_absolute() { p.to_path_buf() } else { self.base.join(p) }
    }

    fn existing(&self, s: &str) -> Result<PathBuf> {
        let p = self.path(s);
        if p.exists() { Ok(p) } else { Err(Error::MissingPath(p)) }
    }

    fn input(&self, s: &str) -> Result<Input> {
        if self.stage_names.contains(s) {
            Ok(Input::Stage(s.to_string()))
        } else {
            self.existing(s).map(Input::Path)
        }
    }
}

/// Keys of one stage table, consumed as they are read so leftovers can be
/// reported.
struct Table {
    stage: String,
    map: toml::Table,
}

impl Table {
    fn take<T: DeserializeOwned>(&mut self, key: &str) -> Result<Option<T>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => v
                .try_into()
                .map(Some)
                .map_err(|e| Error::Config(format!("stage {:?}: key {key:?}: {e}", self.stage))),
        }
    }

    fn need<T: DeserializeOwned>(&mut self, key: &str) -> Result<T> {
        self.take(key)?.ok_or_else(|| Error::Config(format!("stage {:?}: missing key {key:?}", self.stage)))
    }

    /// A string or a list of strings.
    fn list(&mut self, key: &str) -> Result<Vec<String>> {
        match self.map.get(key) {
            Some(toml::Value::String(_)) => Ok(vec![self.need::<String>(key)?]),
            Some(_) => self.need(key),
            None => Ok(Vec::new()),
        }
    }

    fn done(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(Error::Config(format!("stage {:?}: unknown key {k:?}", self.stage))),
            None => Ok(()),
        }
    }
}

fn parse_stage(name: &str, kind: &str, mut t: Table, cx: &Ctx) -> Result<StageKind> {
    let inputs = |t: &mut Table, key: &str| -> Result<Vec<Input>> { t.list(key)?.iter().map(|s| cx.input(s)).collect() };
    let paths = |t: &mut Table, key: &str| -> Result<Vec<PathBuf>> { Ok(t.list(key)?.iter().map(|s| cx.path(s)).collect()) };
    let kind = match kind {
        "build-trainset" => {
            let mut sources: Vec<PositiveSource> = t.need("positive_sources")?;
            for s in &mut sources {
                s.path = cx.existing(&s.path.to_string_lossy())?;
            }
            StageKind::BuildTrainset {
                positive_sources: sources,
                negative_corpus: cx.input(&t.need::<String>("negative_corpus")?)?,
                cap_per_class: t.take("cap_per_class")?.unwrap_or(DEFAULT_CAP),
            }
        }
        "train-ngram" => {
            let trainset = cx.input(&t.need::<String>("trainset")?)?;
            let params = NgramOverrides {
                mode: t.take("mode")?,
                ngram_order: t.take("ngram_order")?,
                min_count: t.take("min_count")?,
                lowercase: t.take("lowercase")?,
                epochs: t.take("epochs")?,
                lr: t.take("lr")?,
                dim: t.take("dim")?,
                bucket_count: t.take("bucket_count")?,
            };
            StageKind::TrainNgram { trainset, params }
        }
        "train-mlp" => {
            let trainset = cx.input(&t.need::<String>("trainset")?)?;
            let embeddings = paths(&mut t, "embeddings")?;
            let params = MlpOverrides {
                hidden_dim: t.take("hidden_dim")?,
                epochs: t.take("epochs")?,
                lr: t.take("lr")?,
                dropout: t.take("dropout")?,
                batch_size: t.take("batch_size")?,
                weight_decay: t.take("weight_decay")?,
            };
            StageKind::TrainMlp { trainset, embeddings, params }
        }
        "build-refs" => StageKind::BuildRefs {
            trainset: cx.input(&t.need::<String>("trainset")?)?,
            embeddings: paths(&mut t, "embeddings")?,
            k: t.take("k")?,
        },
        "score" => StageKind::Score {
            model: cx.input(&t.need::<String>("model")?)?,
            corpus: inputs(&mut t, "corpus")?,
            embeddings: paths(&mut t, "embeddings")?,
        },
        "select" => {
            let scores = cx.input(&t.need::<String>("scores")?)?;
            let corpus = inputs(&mut t, "corpus")?;
            let fraction: Option<f64> = t.take("fraction")?;
            let target: Option<u64> = t.take("target_tokens")?;
            let min_fraction: Option<f64> = t.take("min_fraction")?;
            let retention = match (fraction, target) {
                (Some(p), None) if min_fraction.is_none() => Retention::Fraction(p),
                (None, Some(target_tokens)) => Retention::Budget { target_tokens, min_fraction: min_fraction.unwrap_or(0.0) },
                _ => {
                    return Err(Error::Config(format!(
                        "stage {name:?}: give either fraction, or target_tokens with an optional min_fraction"
                    )))
                }
            };
            StageKind::Select { scores, corpus, retention }
        }
        "mix" => StageKind::Mix {
            filtered: cx.input(&t.need::<String>("filtered")?)?,
            raw: inputs(&mut t, "raw")?,
            rate: t.need("rate")?,
        },
        "decontaminate" => {
            let input = inputs(&mut t, "input")?;
            let mut benchmarks: Vec<BenchmarkSource> = t.take("benchmarks")?.unwrap_or_default();
            for b in &mut benchmarks {
                b.path = cx.existing(&b.path.to_string_lossy())?;
            }
            let n = t.take("n")?.unwrap_or(curate_core::decont::DEFAULT_N);
            let index = t.take::<String>("index")?.map(|s| cx.input(&s)).transpose()?;
            if benchmarks.is_empty() == index.is_none() {
                return Err(Error::Config(format!("stage {name:?}: give exactly one of benchmarks or index")));
            }
            StageKind::Decontaminate { input, benchmarks, n, index }
        }
        "report" => StageKind::Report {
            baseline: inputs(&mut t, "baseline")?,
            runs: inputs(&mut t, "runs")?,
            metrics: t.take::<String>("metrics")?.map(|s| cx.existing(&s)).transpose()?,
            direction: t.take("direction")?.unwrap_or_default(),
        },
        other => return Err(Error::UnknownStage { stage: name.into(), kind: other.into() }),
    };
    t.done()?;
    Ok(kind)
}

fn valid_stage_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

pub fn parse_config(text: &str, base: &Path, seed_override: Option<u64>, env: &dyn Fn(&str) -> Option<String>) -> Result<PipelineConfig> {
    let mut root: toml::Value = toml::from_str::<toml::Table>(text)
        .map_err(|e| Error::Config(e.to_string()))?
        .into();
    interpolate_value(&mut root, env)?;
    let toml::Value::Table(mut root) = root else { unreachable!() };
    let mut top = Table { stage: "<top level>".into(), map: std::mem::take(&mut root) };
    let language: String = top.need("language")?;
    let seed: u64 = top.take::<u64>("seed")?.unwrap_or_default();
    let seed = seed_override.unwrap_or(seed);
    let work_dir = {
        let w: String = top.need("work_dir")?;
        let p = Path::new(&w);
        if p.is_absolute() { p.to_path_buf() } else { base.join(p) }
    };
    let jobs: Option<usize> = top.take("jobs")?;
    let raw_stages: Vec<toml::Table> = top.take("stage")?.unwrap_or_default();
    top.done()?;
    if raw_stages.is_empty() {
        return Err(Error::Config("no stages".into()));
    }

    let mut names = HashSet::new();
    let mut heads = Vec::new();
    for (i, mut t) in raw_stages.into_iter().enumerate() {
        let name = match t.remove("name") {
            Some(toml::Value::String(s)) => s,
            _ => return Err(Error::Config(format!("stage #{} has no string name", i + 1))),
        };
        if !valid_stage_name(&name) {
            return Err(Error::Config(format!("stage name {name:?} must use only letters, digits, - and _")));
        }
        let kind = match t.remove("kind") {
            Some(toml::Value::String(s)) => s,
            _ => return Err(Error::Config(format!("stage {name:?} has no string kind"))),
        };
        if !names.insert(name.clone()) {
            return Err(Error::Config(format!("duplicate stage name {name:?}")));
        }
        heads.push((name, kind, t));
    }
    let cx = Ctx { base, stage_names: &names };
    let mut stages = Vec::new();
    for (name, kind, map) in heads {
        let kind = parse_stage(&name, &kind, Table { stage: name.clone(), map }, &cx)?;
        stages.push(Stage { name, kind, config_hash: String::new() });
    }
    check_roles(&stages)?;
    let mut stages = topo_sort(stages)?;

    let mut lineage: HashMap<String, String> = HashMap::new();
    for s in &mut stages {
        #[derive(Serialize)]
        struct Lineage<'a> {
            language: &'a str,
            seed: u64,
            kind: &'a StageKind,
            deps: BTreeMap<&'a str, &'a str>,
        }
        let deps = s.deps().into_iter().map(|d| (d, lineage[d].as_str())).collect();
        let h = config_hash(&Lineage { language: &language, seed, kind: &s.kind, deps });
        lineage.insert(s.name.clone(), h.clone());
        s.config_hash = h;
    }
    let config_hash = config_hash(&(&language, seed, &stages));
    Ok(PipelineConfig { language, seed, work_dir, jobs, stages, config_hash })
}

fn check_roles(stages: &[Stage]) -> Result<()> {
    let by_name: HashMap<&str, &Stage> = stages.iter().map(|s| (s.name.as_str(), s)).collect();
    for s in stages {
        for (role, input) in s.kind.inputs() {
            if let Input::Stage(dep) = input {
                let produced = by_name[dep.as_str()].kind.role();
                if produced != Some(role) {
                    return Err(Error::Config(format!(
                        "stage {:?} uses stage {dep:?} as {role:?}, but it produces {}",
                        s.name,
                        produced.map_or("nothing referenceable".to_string(), |r| format!("{r:?}"))
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Kahn's algorithm; ties keep declaration order.
fn topo_sort(stages: Vec<Stage>) -> Result<Vec<Stage>> {
    let n = stages.len();
    let index: HashMap<String, usize> = stages.iter().enumerate().map(|(i, s)| (s.name.clone(), i)).collect();
    let mut indegree = vec![0usize; n];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, s) in stages.iter().enumerate() {
        for d in s.deps() {
            indegree[i] += 1;
            users[index[d]].push(i);
        }
    }
    let mut ready: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_front() {
        order.push(i);
        let mut next: Vec<usize> = Vec::new();
        for &u in &users[i] {
            indegree[u] -= 1;
            if indegree[u] == 0 {
                next.push(u);
            }
        }
        next.sort_unstable();
        ready.extend(next);
        ready.make_contiguous().sort_unstable();
    }
    if order.len() < n {
        let stuck = (0..n).filter(|i| !order.contains(i)).map(|i| stages[i].name.clone()).collect();
        return Err(Error::Cycle(stuck));
    }
    let mut slots: Vec<Option<Stage>> = stages.into_iter().map(Some).collect();
    Ok(order.into_iter().map(|i| slots[i].take().unwrap()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(k: &str) -> Option<String> {
        (k == "ROOT").then(|| "/data".to_string())
    }

    #[test]
    fn interpolation() {
        assert_eq!(interpolate("${ROOT}/x", &env).unwrap(), "/data/x");
        assert_eq!(interpolate("$$5 and $x", &env).unwrap(), "$5 and $x");
        assert!(matches!(interpolate("${NOPE}", &env), Err(Error::Config(_))));
        assert!(matches!(interpolate("${ROOT", &env), Err(Error::Config(_))));
    }

    fn cfg_in(dir: &Path, stages: &str) -> Result<PipelineConfig> {
        std::fs::write(dir.join("s.tsv"), "#scorer=x\tconfig=y\n").unwrap();
        std::fs::write(dir.join("c.docs.jsonl"), "").unwrap();
        let text = format!("language = \"dan_Latn\"\nseed = 1\nwork_dir = \"${{ROOT}}/run\"\n{stages}");
        parse_config(&text, dir, None, &env)
    }

    fn cfg(stages: &str) -> Result<PipelineConfig> {
        cfg_in(tempfile::tempdir().unwrap().path(), stages)
    }

    #[test]
    fn stage_errors_are_named() {
        let e = cfg("[[stage]]\nname = \"a\"\nkind = \"frobnicate\"\n").unwrap_err();
        assert!(matches!(e, Error::UnknownStage { ref kind, .. } if kind == "frobnicate"));

        let e = cfg("[[stage]]\nname = \"a\"\nkind = \"score\"\nmodel = \"nope.ngqf\"\ncorpus = \"c.docs.jsonl\"\n").unwrap_err();
        assert!(matches!(e, Error::MissingPath(ref p) if p.ends_with("nope.ngqf")), "{e}");

        let e = cfg(concat!(
            "[[stage]]\nname = \"a\"\nkind = \"mix\"\nfiltered = \"b\"\nraw = \"c.docs.jsonl\"\nrate = 0.05\n",
            "[[stage]]\nname = \"b\"\nkind = \"mix\"\nfiltered = \"a\"\nraw = \"c.docs.jsonl\"\nrate = 0.05\n",
        ))
        .unwrap_err();
        assert!(matches!(e, Error::Cycle(ref s) if s.len() == 2));

        let e = cfg("[[stage]]\nname = \"a\"\nkind = \"select\"\nscores = \"s.tsv\"\nfraction = 0.1\nfrac = 2\n").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("frac")));
    }

    #[test]
    fn minimal_select_and_hash_stability() {
        let stages = "[[stage]]\nname = \"sel\"\nkind = \"select\"\nscores = \"s.tsv\"\ncorpus = \"c.docs.jsonl\"\nfraction = 0.1\n";
        let dir = tempfile::tempdir().unwrap();
        let a = cfg_in(dir.path(), stages).unwrap();
        assert_eq!(a.stages.len(), 1);
        assert_eq!(a.work_dir, PathBuf::from("/data/run"));
        let b = cfg_in(dir.path(), stages).unwrap();
        assert_eq!(a.stages[0].config_hash, b.stages[0].config_hash);
    }

    #[test]
    fn dependencies_order_stages_and_propagate_hashes() {
        let stages = concat!(
            "[[stage]]\nname = \"sel\"\nkind = \"select\"\nscores = \"sc\"\ncorpus = \"c.docs.jsonl\"\nfraction = 0.1\n",
            "[[stage]]\nname = \"sc\"\nkind = \"score\"\nmodel = \"s.tsv\"\ncorpus = \"c.docs.jsonl\"\n",
        );
        let dir = tempfile::tempdir().unwrap();
        let a = cfg_in(dir.path(), stages).unwrap();
        let order: Vec<&str> = a.stages.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(order, ["sc", "sel"]);
        let changed = cfg_in(dir.path(), &stages.replace("model = \"s.tsv\"", "model = \"c.docs.jsonl\"")).unwrap();
        assert_ne!(a.stage("sel").unwrap().config_hash, changed.stage("sel").unwrap().config_hash);
    }

    #[test]
    fn role_mismatch_is_rejected() {
        let stages = concat!(
            "[[stage]]\nname = \"sc\"\nkind = \"score\"\nmodel = \"s.tsv\"\ncorpus = \"c.docs.jsonl\"\n",
            "[[stage]]\nname = \"m\"\nkind = \"mix\"\nfiltered = \"sc\"\nraw = \"c.docs.jsonl\"\nrate = 0.1\n",
        );
        assert!(matches!(cfg(stages), Err(Error::Config(_))));
    }
}
