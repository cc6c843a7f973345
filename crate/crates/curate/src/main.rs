use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use curate::config::load_config;
use curate::decont::BenchmarkSource;
use curate::error::{Error, Result};
use curate::hash::config_hash;
use curate::pipeline::{dry_run, run_pipeline};
use curate::selection::Retention;
use curate::stages::*;
use curate::trainset::TrainsetSpec;
use curate_core::rank::Direction;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "curate", version, about = "Score, select and decontaminate pretraining corpora")]
struct Cli {
    /// Worker threads for parallel scoring and scanning (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Replace the seed of the config or subcommand.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a pipeline config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Validate and print which stages would run.
        #[arg(long)]
        dry_run: bool,
    },
    /// Build train/held-out classifier sets from a TOML trainset spec.
    BuildTrainset {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    TrainNgram(TrainNgramArgs),
    TrainMlp(TrainMlpArgs),
    /// Sample and normalize cosine reference embeddings.
    BuildRefs(BuildRefsArgs),
    /// Score documents with an n-gram model, MLP or cosine reference set.
    Score(ScoreArgs),
    /// Turn a score table into a selection plan.
    Plan(PlanArgs),
    /// Keep the documents a plan retains.
    Filter(FilterArgs),
    /// Mix replayed raw documents into a filtered corpus.
    Mix(MixArgs),
    /// Build a benchmark n-gram index.
    BuildIndex(BuildIndexArgs),
    Decontaminate(DecontArgs),
    /// Whitespace-token length statistics.
    Stats(StatsArgs),
    /// Tie-averaged average rank over a metric CSV.
    Rank(RankArgs),
    /// Compare filtered corpora against their source corpus.
    Report(ReportArgs),
}

#[derive(Args, Serialize)]
struct TrainNgramArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    heldout: Option<PathBuf>,
    /// Language code; picks word or character n-gram defaults.
    #[arg(long)]
    lang: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    ngram_order: Option<usize>,
    #[arg(long)]
    min_count: Option<u32>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    bucket_count: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct TrainMlpArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    heldout: Option<PathBuf>,
    #[arg(long, num_args = 1.., required = true)]
    embeddings: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct BuildRefsArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    embeddings: Vec<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    corpus: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    embeddings: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct PlanArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Fraction of documents to keep.
    #[arg(long, conflicts_with = "target_tokens")]
    fraction: Option<f64>,
    /// Token budget; requires --corpus to measure the total.
    #[arg(long, requires = "corpus")]
    target_tokens: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    min_fraction: f64,
    #[arg(long, num_args = 1..)]
    corpus: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct FilterArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    corpus: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to `<out>.stats.json`.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct MixArgs {
    #[arg(long)]
    filtered: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    raw: Vec<PathBuf>,
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// `name=path:field1,field2`
fn parse_benchmark(s: &str) -> std::result::Result<BenchmarkSource, String> {
    let (name, rest) = s.split_once('=').ok_or("expected name=path:field1,field2")?;
    let (path, fields) = rest.rsplit_once(':').ok_or("expected name=path:field1,field2")?;
    Ok(BenchmarkSource { name: name.into(), path: path.into(), fields: fields.split(',').map(Into::into).collect() })
}

#[derive(Args, Serialize)]
struct BuildIndexArgs {
    /// `name=path:field1,field2`, repeatable.
    #[arg(long = "benchmark", value_parser = parse_benchmark, required = true)]
    benchmarks: Vec<BenchmarkSource>,
    #[arg(long, default_value_t = curate_core::decont::DEFAULT_N)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct DecontArgs {
    #[arg(long, conflicts_with = "benchmarks")]
    index: Option<PathBuf>,
    /// `name=path:field1,field2`, repeatable.
    #[arg(long = "benchmark", value_parser = parse_benchmark)]
    benchmarks: Vec<BenchmarkSource>,
    #[arg(long, default_value_t = curate_core::decont::DEFAULT_N)]
    n: usize,
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct StatsArgs {
    #[arg(long, num_args = 1.., required = true)]
    corpus: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct RankArgs {
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long)]
    lower_is_better: bool,
    #[arg(long)]
    out_json: PathBuf,
    #[arg(long)]
    out_csv: PathBuf,
}

/// `name=path`
fn parse_run(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (n, p) = s.split_once('=').ok_or("expected name=path")?;
    Ok((n.into(), p.into()))
}

#[derive(Args, Serialize)]
struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    baseline: Vec<PathBuf>,
    /// `name=path`, repeatable.
    #[arg(long = "run", value_parser = parse_run, required = true)]
    runs: Vec<(String, PathBuf)>,
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn print<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("reports serialize"));
}

fn resolve_spec(spec_path: &Path) -> Result<TrainsetSpec> {
    let text = std::fs::read_to_string(spec_path).map_err(Error::io(spec_path))?;
    let mut spec: TrainsetSpec = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", spec_path.display())))?;
    let base = spec_path.parent().unwrap_or(Path::new(""));
    let fix = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    fix(&mut spec.negative_corpus);
    for s in &mut spec.positive_sources {
        fix(&mut s.path);
    }
    Ok(spec)
}

fn run(cli: Cli) -> Result<()> {
    let seed = |s: u64| cli.seed_override.unwrap_or(s);
    match cli.cmd {
        Cmd::Run { config, dry_run: dry } => {
            let cfg = load_config(&config, cli.seed_override)?;
            if cli.jobs.is_none() {
                if let Some(j) = cfg.jobs {
                    init_pool(j);
                }
            }
            if dry {
                for (name, action) in dry_run(&cfg) {
                    let s = cfg.stage(&name).unwrap();
                    println!("{action:4}  {name} ({}, config {})", s.kind.name(), s.config_hash);
                }
                return Ok(());
            }
            let m = run_pipeline(&cfg)?;
            for s in &m.stages {
                println!("{:<20} {:?}", s.name, s.status);
            }
        }
        Cmd::BuildTrainset { spec, out } => {
            let mut spec = resolve_spec(&spec)?;
            spec.seed = seed(spec.seed);
            let h = config_hash(&spec);
            print(&run_build_trainset(&spec, &out, &h)?.0);
        }
        Cmd::TrainNgram(a) => {
            let h = config_hash(&(&a, cli.seed_override));
            let o = NgramOverrides {
                ngram_order: a.ngram_order,
                min_count: a.min_count,
                epochs: a.epochs,
                lr: a.lr,
                dim: a.dim,
                bucket_count: a.bucket_count,
                ..Default::default()
            };
            print(&run_train_ngram(&a.train, a.heldout.as_deref(), &a.lang, &o, seed(a.seed), &a.out, &h)?.0);
        }
        Cmd::TrainMlp(a) => {
            let h = config_hash(&(&a, cli.seed_override));
            let o = MlpOverrides { epochs: a.epochs, lr: a.lr, ..Default::default() };
            print(&run_train_mlp(&a.train, a.heldout.as_deref(), &a.embeddings, &o, seed(a.seed), &a.out, &h)?.0);
        }
        Cmd::BuildRefs(a) => {
            let h = config_hash(&(&a, cli.seed_override));
            print(&run_build_refs(&a.train, &a.embeddings, a.k, seed(a.seed), &a.out, &h)?.0);
        }
        Cmd::Score(a) => {
            let h = config_hash(&a);
            let (mut report, _) = run_score(&a.model, &a.corpus, &a.embeddings, &a.out, &h)?;
            report.zero_norm_ids.truncate(20);
            print(&report);
        }
        Cmd::Plan(a) => {
            let retention = match (a.fraction, a.target_tokens) {
                (Some(p), None) => Retention::Fraction(p),
                (None, Some(t)) => Retention::Budget { target_tokens: t, min_fraction: a.min_fraction },
                _ => return Err(Error::Config("give --fraction or --target-tokens".into())),
            };
            let h = config_hash(&a);
            let file = run_plan(&a.scores, retention, &a.corpus, &a.out, &h)?;
            println!(
                "retained {} of {} documents (p = {}, threshold {})",
                file.report.plan.retained.len(),
                file.report.plan.total,
                file.report.plan.fraction,
                file.report.plan.threshold
            );
        }
        Cmd::Filter(a) => {
            let h = config_hash(&a);
            let plan = load_plan(&a.plan)?;
            let stats = a.stats.clone().unwrap_or_else(|| {
                let mut s = a.out.as_os_str().to_owned();
                s.push(".stats.json");
                s.into()
            });
            print(&run_filter(&plan, &a.corpus, &a.out, &stats, &h)?.0);
        }
        Cmd::Mix(a) => {
            let h = config_hash(&(&a, cli.seed_override));
            print(&run_mix(&a.filtered, &a.raw, a.rate, seed(a.seed), &a.out, &h)?.0);
        }
        Cmd::BuildIndex(a) => print(&run_build_index(&a.benchmarks, a.n, &a.out)?),
        Cmd::Decontaminate(a) => {
            let h = config_hash(&a);
            let source = match a.index {
                Some(p) => IndexSource::File(p),
                None if !a.benchmarks.is_empty() => IndexSource::Benchmarks { sources: a.benchmarks, n: a.n },
                None => return Err(Error::Config("give --index or at least one --benchmark".into())),
            };
            let (mut file, _) = run_decontaminate(&source, &a.input, &a.out, &h)?;
            file.report.samples.truncate(5);
            print(&file);
        }
        Cmd::Stats(a) => print(&run_stats(&a.corpus, &a.out)?),
        Cmd::Rank(a) => {
            let dir = if a.lower_is_better { Direction::LowerIsBetter } else { Direction::HigherIsBetter };
            for r in run_rank(&a.metrics, dir, &a.out_json, &a.out_csv)? {
                println!("{:<24} {:.4}", r.approach, r.average_rank);
            }
        }
        Cmd::Report(a) => {
            let runs: Vec<(String, Vec<PathBuf>)> = a.runs.into_iter().map(|(n, p)| (n, vec![p])).collect();
            let s = run_report(("baseline", &a.baseline), &runs, a.metrics.as_deref().map(|m| (m, Direction::HigherIsBetter)), &a.out)?;
            for o in s.outputs {
                println!("{}", o.display());
            }
        }
    }
    Ok(())
}

fn init_pool(jobs: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        init_pool(j);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
