use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use nbprior::corpus::wiki::{ingest_wiki_dump, IngestOptions, DEFAULT_MIN_BYTES};
use nbprior::corpus::{load_corpus, store_corpus, DocId};
use nbprior::experiment::{
    export_review_list, Experiment, ExperimentSpec, RankedPredictions, RunManifest, DEFAULT_LINK_TEMPLATE,
    DEFAULT_TOP_N,
};
use nbprior::metrics::{hits_at_k, ppv_profile};
use nbprior::nb_model::Hyperparameters;
use nbprior::prior_search::{Cell, Grid};
use nbprior::stats::{bootstrap_ci, significance_test, write_report, OutcomeVector, ReportRow};
use nbprior::synthetic::{generate, SyntheticConfig};

const USAGE: u8 = 1;
const DATA: u8 = 2;
const INTERNAL: u8 = 3;

/// Learn naive Bayes prior hyperparameters by LOO search and rank a corpus.
#[derive(Parser)]
#[command(name = "nbprior", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a MediaWiki XML dump into a corpus store.
    Ingest(IngestArgs),
    /// Generate a synthetic corpus store and its truth file.
    Synth(SynthArgs),
    /// Search the prior grid and write the learned hyperparameters.
    Search(SearchArgs),
    /// Rank every unlabeled document under fixed hyperparameters.
    Classify(ClassifyArgs),
    /// PPV at k and the PPV profile of a ranked list.
    Evaluate(EvaluateArgs),
    /// Compare two ranked lists: bootstrap intervals, t-test, review list.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// MediaWiki pages-articles XML dump.
    #[arg(long)]
    dump: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_BYTES)]
    min_bytes: usize,
    #[arg(long, default_value_t = 16)]
    shards: usize,
    /// Corpus store directory to create.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = SyntheticConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SyntheticConfig::default().vocab)]
    vocab: usize,
    #[arg(long, default_value_t = SyntheticConfig::default().topic_tokens)]
    topic_tokens: usize,
    #[arg(long, default_value_t = SyntheticConfig::default().members)]
    members: usize,
    #[arg(long, default_value_t = SyntheticConfig::default().pool)]
    pool: usize,
    #[arg(long, default_value_t = SyntheticConfig::default().hidden_rate)]
    hidden_rate: f64,
    #[arg(long, default_value_t = SyntheticConfig::default().background_topics)]
    background_topics: usize,
    #[arg(long, default_value_t = SyntheticConfig::default().max_len)]
    max_len: usize,
    #[arg(long, default_value_t = SyntheticConfig::default().shards)]
    shards: usize,
    /// Writes `corpus/` and `truth.txt` here.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainingArgs {
    /// Corpus store directory.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    category: String,
    /// Comma-separated training seeds. The first one is the reporting seed.
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
    seeds: Vec<u64>,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    training: TrainingArgs,
    /// Comma-separated `lambda_neg:lambda_pos` start points.
    #[arg(long, value_delimiter = ',', value_parser = parse_start)]
    starts: Vec<(f64, f64)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    training: TrainingArgs,
    #[arg(long, default_value_t = 1.0)]
    lambda_neg: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_pos: f64,
    /// Read the hyperparameters from a `learned.txt` written by `search`.
    #[arg(long, conflicts_with_all = ["lambda_neg", "lambda_pos"])]
    learned: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// predictions.csv written by `classify`.
    #[arg(long)]
    predictions: PathBuf,
    /// One document id per line.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 250)]
    eval_k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    study: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 250)]
    eval_k: usize,
    /// Titles taken from each list for the review page.
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    top_n: usize,
    #[arg(long, default_value_t = 10_000)]
    bootstrap_b: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    bootstrap_seed: u64,
    #[arg(long, default_value = DEFAULT_LINK_TEMPLATE)]
    link_template: String,
    #[arg(long)]
    out: PathBuf,
}

fn parse_start(s: &str) -> Result<(f64, f64), String> {
    let (neg, pos) = s.split_once(':').ok_or_else(|| format!("expected lambda_neg:lambda_pos, got {s:?}"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((num(neg)?, num(pos)?))
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl From<nbprior::Error> for Failure {
    fn from(e: nbprior::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn context<T, E: std::fmt::Display>(r: Result<T, E>, path: &Path) -> Result<T, Failure> {
    r.map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Failure> {
    Ok(BufWriter::new(context(fs::File::create(path), path)?))
}

fn ingest(a: IngestArgs) -> Outcome {
    let file = context(fs::File::open(&a.dump), &a.dump)?;
    let opts = IngestOptions { min_bytes: a.min_bytes, shards: a.shards };
    let (corpus, index, stats) = ingest_wiki_dump(BufReader::new(file), opts)?;
    store_corpus(&corpus, &index, &a.out)?;
    println!(
        "pages {} kept {} redirects {} other namespace {} disambiguation {} too short {}",
        stats.pages, stats.kept, stats.redirects, stats.other_namespace, stats.disambiguation, stats.too_short
    );
    Ok(())
}

fn synth(a: SynthArgs) -> Outcome {
    let config = SyntheticConfig {
        seed: a.seed,
        vocab: a.vocab,
        topic_tokens: a.topic_tokens,
        members: a.members,
        pool: a.pool,
        hidden_rate: a.hidden_rate,
        background_topics: a.background_topics,
        max_len: a.max_len,
        shards: a.shards,
        ..SyntheticConfig::default()
    };
    let s = generate(&config)?;
    store_corpus(&s.corpus, &s.index, a.out.join("corpus"))?;
    let mut truth = create(&a.out.join("truth.txt"))?;
    for id in &s.hidden {
        writeln!(truth, "{id}")?;
    }
    truth.flush()?;
    println!("category {:?}: {} documents, {} hidden members", s.category, s.corpus.len(), s.hidden.len());
    Ok(())
}

fn spec(t: &TrainingArgs, starts: Vec<Cell>) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(&t.category);
    spec.seeds = t.seeds.clone();
    if !starts.is_empty() {
        spec.starts = starts;
    }
    spec
}

fn search(a: SearchArgs) -> Outcome {
    let grid = Grid::standard();
    let starts = a
        .starts
        .iter()
        .map(|&(neg, pos)| grid.cell_for(neg, pos).map_err(|e| Failure::Usage(format!("--starts: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let (corpus, index) = load_corpus(&a.training.corpus)?;
    let exp = Experiment::prepare(&corpus, &index, spec(&a.training, starts))?;
    let result = exp.search()?;
    fs::create_dir_all(&a.out)?;
    for seed in &result.per_seed {
        seed.memo.write_csv(&grid, create(&a.out.join(format!("memo-seed{}.csv", seed.seed)))?)?;
        seed.outcome.write_log(&grid, create(&a.out.join(format!("search-seed{}.log", seed.seed)))?)?;
    }
    result.aggregate.write_csv(&grid, create(&a.out.join("terrain.csv"))?)?;
    let h = result.learned;
    fs::write(a.out.join("learned.txt"), format!("lambda_neg={}\nlambda_pos={}\n", h.lambda_neg, h.lambda_pos))?;
    let manifest = RunManifest {
        category: exp.spec().category.clone(),
        seeds: exp.spec().seeds.clone(),
        starts: exp
            .spec()
            .starts
            .iter()
            .map(|&c| grid.hyperparameters(c).map(|h| (h.lambda_neg, h.lambda_pos)))
            .collect::<Result<_, _>>()?,
        learned: Some(h),
        positives_predicted: BTreeMap::new(),
    };
    fs::write(a.out.join("manifest.txt"), manifest.to_text())?;
    println!("lambda_neg={} lambda_pos={}", h.lambda_neg, h.lambda_pos);
    Ok(())
}

fn read_learned(path: &Path) -> Result<Hyperparameters, Failure> {
    let text = context(fs::read_to_string(path), path)?;
    let mut neg = None;
    let mut pos = None;
    for line in text.lines() {
        let Some((key, value)) = line.split_once('=') else { continue };
        let value = value.trim().parse::<f64>().map_err(|e| Failure::Data(format!("{}: {key}: {e}", path.display())));
        match key.trim() {
            "lambda_neg" => neg = Some(value?),
            "lambda_pos" => pos = Some(value?),
            _ => {}
        }
    }
    match (neg, pos) {
        (Some(n), Some(p)) => Ok(Hyperparameters::new(n, p)?),
        _ => Err(Failure::Data(format!("{}: missing lambda_neg or lambda_pos", path.display()))),
    }
}

fn classify(a: ClassifyArgs) -> Outcome {
    let h = match &a.learned {
        Some(path) => read_learned(path)?,
        None => Hyperparameters::new(a.lambda_neg, a.lambda_pos).map_err(|e| Failure::Usage(e.to_string()))?,
    };
    let (corpus, index) = load_corpus(&a.training.corpus)?;
    let exp = Experiment::prepare(&corpus, &index, spec(&a.training, Vec::new()))?;
    let ranked = exp.rank(0, h);
    fs::create_dir_all(&a.out)?;
    ranked.write_csv(create(&a.out.join("predictions.csv"))?)?;
    println!("{} ranked, {} predicted positive", ranked.len(), ranked.positives_predicted());
    Ok(())
}

fn read_truth(path: &Path) -> Result<HashSet<DocId>, Failure> {
    let text = context(fs::read_to_string(path), path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.parse::<DocId>().map_err(|e| Failure::Data(format!("{}: {l:?}: {e}", path.display()))))
        .collect()
}

fn read_predictions(path: &Path) -> Result<RankedPredictions, Failure> {
    let file = context(fs::File::open(path), path)?;
    context(RankedPredictions::read_csv(BufReader::new(file)), path)
}

fn evaluate(a: EvaluateArgs) -> Outcome {
    let ranked = read_predictions(&a.predictions)?;
    let truth = read_truth(&a.truth)?;
    let ids = ranked.ids();
    let hits = hits_at_k(&ids, &truth, a.eval_k)?;
    let profile = ppv_profile(&ids, &truth, a.eval_k)?;
    fs::create_dir_all(&a.out)?;
    let mut w = csv::Writer::from_writer(create(&a.out.join("metrics.csv"))?);
    w.write_record(["k", "hits", "ppv", "positives_predicted"])?;
    let ppv = hits as f64 / a.eval_k as f64;
    w.write_record([a.eval_k.to_string(), hits.to_string(), ppv.to_string(), ranked.positives_predicted().to_string()])?;
    w.flush()?;
    profile.write_csv(create(&a.out.join("profile.csv"))?)?;
    println!("PPV@{} = {ppv} ({hits} hits)", a.eval_k);
    Ok(())
}

fn outcomes(ranked: &RankedPredictions, truth: &HashSet<DocId>, k: usize, path: &Path) -> Result<OutcomeVector, Failure> {
    if ranked.len() < k {
        return Err(Failure::Data(format!("{}: {} predictions, need {k}", path.display(), ranked.len())));
    }
    Ok(OutcomeVector::new(ranked.entries[..k].iter().map(|e| truth.contains(&e.id)).collect())?)
}

fn report(a: ReportArgs) -> Outcome {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::Usage(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let baseline = read_predictions(&a.baseline)?;
    let study = read_predictions(&a.study)?;
    let truth = read_truth(&a.truth)?;
    let vb = outcomes(&baseline, &truth, a.eval_k, &a.baseline)?;
    let vs = outcomes(&study, &truth, a.eval_k, &a.study)?;
    let p_value = significance_test(&vb, &vs)?;
    let rows = [("baseline", &vb), ("study", &vs)]
        .into_iter()
        .map(|(model, v)| {
            Ok(ReportRow {
                model: model.into(),
                k: a.eval_k,
                ppv: v.mean(),
                ci: bootstrap_ci(v, a.bootstrap_b, a.alpha, a.bootstrap_seed)?,
                p_value,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    fs::create_dir_all(&a.out)?;
    write_report(&rows, create(&a.out.join("stats.csv"))?)?;
    fs::write(a.out.join("review.html"), export_review_list(&baseline, &study, a.top_n, &a.link_template))?;
    for r in &rows {
        println!("{} PPV@{} = {} [{}, {}]", r.model, r.k, r.ppv, r.ci.lo, r.ci.hi);
    }
    println!("p = {p_value}");
    Ok(())
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Synth(a) => synth(a),
        Command::Search(a) => search(a),
        Command::Classify(a) => classify(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    if std::env::args_os().len() <= 1 {
        let _ = Cli::command().print_help();
        return ExitCode::from(USAGE);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match catch_unwind(AssertUnwindSafe(|| run(cli.command))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(USAGE)
        }
        Ok(Err(Failure::Data(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(DATA)
        }
        Err(_) => ExitCode::from(INTERNAL),
    }
}
