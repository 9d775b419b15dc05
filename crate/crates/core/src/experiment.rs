//! Seeded training sets, the baseline and learned-prior branches, corpus
//! ranking and the blinded review list.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::corpus::{CategoryIndex, Corpus, DocId, Document};
use crate::error::{Error, Result};
use crate::metrics;
use crate::nb_model::{CountModel, Hyperparameters, Scorer};
use crate::prior_search::{
    aggregate_over_seeds, multi_start_search_parallel, Aggregate, Cell, Grid, LooEvaluator,
    MemoTable, MultiStartOutcome,
};
use crate::rng;

pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
pub const DEFAULT_TOP_N: usize = 1000;
pub const DEFAULT_LINK_TEMPLATE: &str = "https://en.wikipedia.org/wiki/{title}";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub category: String,
    /// The first seed is the reporting seed: its training positives are
    /// excluded from, and its model produces, the ranked lists.
    pub seeds: Vec<u64>,
    pub starts: Vec<Cell>,
    pub top_n: usize,
}

impl ExperimentSpec {
    pub fn new(category: impl Into<String>) -> Self {
        Self {
            category: category.into(),
            seeds: DEFAULT_SEEDS.to_vec(),
            starts: Grid::standard().default_starts(),
            top_n: DEFAULT_TOP_N,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("at least one seed is required".into()));
        }
        if self.starts.is_empty() {
            return Err(Error::InvalidArgument("at least one start cell is required".into()));
        }
        if self.top_n == 0 {
            return Err(Error::InvalidArgument("top_n must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSet {
    pub seed: u64,
    /// All direct category members, ascending.
    pub positives: Vec<DocId>,
    /// As many sampled non-members, ascending.
    pub negatives: Vec<DocId>,
}

/// Draws `k` non-members of `category` uniformly without replacement from
/// the ascending list of non-member ids. Returned ascending.
pub fn sample_negatives(
    corpus: &Corpus,
    index: &CategoryIndex,
    category: &str,
    k: usize,
    seed: u64,
) -> Result<Vec<DocId>> {
    let members = index.require(category)?;
    let candidates: Vec<DocId> = corpus
        .sorted_ids()
        .into_iter()
        .filter(|id| !members.contains(id))
        .collect();
    if candidates.len() < k {
        return Err(Error::NotEnoughNegatives {
            needed: k,
            available: candidates.len(),
        });
    }
    let mut sample = rng::sample_without_replacement(&mut rng::seeded(seed), &candidates, k);
    sample.sort_unstable();
    Ok(sample)
}

pub fn training_set(
    corpus: &Corpus,
    index: &CategoryIndex,
    category: &str,
    seed: u64,
) -> Result<TrainingSet> {
    let members = index.require(category)?;
    if let Some(&id) = members.iter().find(|&&id| !corpus.contains(id)) {
        return Err(Error::UnknownDocument(id));
    }
    let positives: Vec<DocId> = members.iter().copied().collect();
    let negatives = sample_negatives(corpus, index, category, positives.len(), seed)?;
    Ok(TrainingSet {
        seed,
        positives,
        negatives,
    })
}

fn docs<'c>(corpus: &'c Corpus, ids: &[DocId]) -> Result<Vec<&'c Document>> {
    ids.iter()
        .map(|&id| corpus.get(id).ok_or(Error::UnknownDocument(id)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: DocId,
    pub title: String,
    pub log_odds: f64,
    pub p_pos: f64,
}

/// Corpus documents ordered by descending log-odds, ties by ascending id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedPredictions {
    pub entries: Vec<Prediction>,
}

impl RankedPredictions {
    fn from_unsorted(mut entries: Vec<Prediction>) -> Self {
        entries.sort_unstable_by(|a, b| b.log_odds.total_cmp(&a.log_odds).then(a.id.cmp(&b.id)));
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<DocId> {
        self.entries.iter().map(|e| e.id).collect()
    }

    /// Entries with `p_pos > 0.5`.
    pub fn positives_predicted(&self) -> usize {
        self.entries.iter().filter(|e| e.p_pos > 0.5).count()
    }

    pub fn ppv_at_k(&self, truth: &HashSet<DocId>, k: usize) -> Result<f64> {
        metrics::ppv_at_k(&self.ids(), truth, k)
    }

    /// CSV with columns `rank,doc_id,title,log_odds,p_pos`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "doc_id", "title", "log_odds", "p_pos"])?;
        for (i, e) in self.entries.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                e.id.to_string(),
                e.title.clone(),
                e.log_odds.to_string(),
                e.p_pos.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a file written by [`write_csv`](Self::write_csv), keeping the
    /// order of its rows.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut entries = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let field = |i: usize| {
                record.get(i).ok_or_else(|| {
                    Error::InvalidArgument(format!("predictions row {} has too few columns", line + 1))
                })
            };
            let bad = |what: &str| Error::InvalidArgument(format!("predictions row {}: bad {what}", line + 1));
            entries.push(Prediction {
                id: field(1)?.parse().map_err(|_| bad("doc_id"))?,
                title: field(2)?.to_owned(),
                log_odds: field(3)?.parse().map_err(|_| bad("log_odds"))?,
                p_pos: field(4)?.parse().map_err(|_| bad("p_pos"))?,
            });
        }
        Ok(Self { entries })
    }
}

/// Scores every corpus document not in `exclude`, in parallel over shards.
pub fn rank_corpus(corpus: &Corpus, scorer: &Scorer<'_>, exclude: &HashSet<DocId>) -> RankedPredictions {
    let entries: Vec<Prediction> = (0..corpus.shard_count())
        .into_par_iter()
        .flat_map_iter(|shard| {
            corpus
                .shard(shard)
                .filter(|d| !exclude.contains(&d.id))
                .map(|d| {
                    let p = scorer.score(d.tokens.iter().map(String::as_str));
                    Prediction {
                        id: d.id,
                        title: d.title.clone(),
                        log_odds: p.log_odds,
                        p_pos: p.p_pos,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    RankedPredictions::from_unsorted(entries)
}

/// Training set and count model for one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub training: TrainingSet,
    pub model: CountModel,
}

/// Search results for one seed.
#[derive(Debug, Clone)]
pub struct SeedSearch {
    pub seed: u64,
    pub outcome: MultiStartOutcome,
    /// Cells explored by this seed's own searches.
    pub explored: usize,
    /// Scores of every cell evaluated under this seed, including cells
    /// back-filled during aggregation.
    pub memo: MemoTable,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub learned_cell: Cell,
    pub learned: Hyperparameters,
    pub per_seed: Vec<SeedSearch>,
    pub aggregate: Aggregate,
}

pub struct Experiment<'c> {
    corpus: &'c Corpus,
    spec: ExperimentSpec,
    grid: Grid,
    runs: Vec<SeedRun>,
}

impl<'c> Experiment<'c> {
    /// Builds the training set and count model of every seed.
    pub fn prepare(corpus: &'c Corpus, index: &CategoryIndex, spec: ExperimentSpec) -> Result<Self> {
        spec.validate()?;
        let grid = Grid::standard();
        for &start in &spec.starts {
            grid.check(start)?;
        }
        let runs = spec
            .seeds
            .par_iter()
            .map(|&seed| {
                let training = training_set(corpus, index, &spec.category, seed)?;
                let model = CountModel::build(
                    docs(corpus, &training.positives)?,
                    docs(corpus, &training.negatives)?,
                )?;
                Ok(SeedRun { training, model })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            corpus,
            spec,
            grid,
            runs,
        })
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn runs(&self) -> &[SeedRun] {
        &self.runs
    }

    /// Ranks the corpus with seed `run`'s model, excluding its training positives.
    pub fn rank(&self, run: usize, hp: Hyperparameters) -> RankedPredictions {
        let run = &self.runs[run];
        let exclude: HashSet<DocId> = run.training.positives.iter().copied().collect();
        rank_corpus(self.corpus, &run.model.scorer(hp), &exclude)
    }

    pub fn baseline(&self) -> RankedPredictions {
        self.rank(0, Hyperparameters::BAYES_LAPLACE)
    }

    /// Multi-start search under every seed, then cross-seed aggregation.
    pub fn search(&self) -> Result<StudyResult> {
        let size = self.grid.len();
        let evaluators: Vec<LooEvaluator<'_>> = self
            .runs
            .iter()
            .map(|r| LooEvaluator::new(&r.model, &self.grid))
            .collect();
        let searched = evaluators
            .par_iter()
            .map(|ev| multi_start_search_parallel(&self.spec.starts, size, ev, MemoTable::new()))
            .collect::<Result<Vec<_>>>()?;
        let explored: Vec<usize> = searched.iter().map(|(_, memo)| memo.len()).collect();
        let (outcomes, mut memos): (Vec<_>, Vec<_>) = searched.into_iter().unzip();

        let aggregate = aggregate_over_seeds(&mut memos, &evaluators)?;
        let learned_cell = aggregate.best.cell;
        let per_seed = self
            .runs
            .iter()
            .zip(outcomes)
            .zip(memos)
            .zip(explored)
            .map(|(((run, outcome), memo), explored)| SeedSearch {
                seed: run.training.seed,
                outcome,
                explored,
                memo,
            })
            .collect();
        Ok(StudyResult {
            learned_cell,
            learned: self.grid.hyperparameters(learned_cell)?,
            per_seed,
            aggregate,
        })
    }

    pub fn study(&self) -> Result<(StudyResult, RankedPredictions)> {
        let result = self.search()?;
        let ranked = self.rank(0, result.learned);
        Ok((result, ranked))
    }
}

pub fn run_baseline(corpus: &Corpus, index: &CategoryIndex, spec: ExperimentSpec) -> Result<RankedPredictions> {
    Ok(Experiment::prepare(corpus, index, spec)?.baseline())
}

pub fn run_study(
    corpus: &Corpus,
    index: &CategoryIndex,
    spec: ExperimentSpec,
) -> Result<(StudyResult, RankedPredictions)> {
    Experiment::prepare(corpus, index, spec)?.study()
}

/// Run metadata written next to the outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub category: String,
    pub seeds: Vec<u64>,
    pub starts: Vec<(f64, f64)>,
    pub learned: Option<Hyperparameters>,
    /// Branch name to its count of `p_pos > 0.5` predictions.
    pub positives_predicted: BTreeMap<String, usize>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "category={}", self.category);
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "seeds={}", seeds.join(","));
        let starts: Vec<String> = self.starts.iter().map(|(n, p)| format!("{n}:{p}")).collect();
        let _ = writeln!(out, "starts={}", starts.join(","));
        if let Some(hp) = self.learned {
            let _ = writeln!(out, "lambda_neg={}", hp.lambda_neg);
            let _ = writeln!(out, "lambda_pos={}", hp.lambda_pos);
        }
        for (branch, n) in &self.positives_predicted {
            let _ = writeln!(out, "positives_predicted.{branch}={n}");
        }
        let _ = writeln!(out, "rng={}", rng::ALGORITHM);
        out
    }
}

/// Merges the top `top_n` titles of both lists into one alphabetical,
/// deduplicated HTML list of links. Nothing in the page tells which list a
/// title came from or how it scored. `link_template` must contain `{title}`.
pub fn export_review_list(
    a: &RankedPredictions,
    b: &RankedPredictions,
    top_n: usize,
    link_template: &str,
) -> String {
    let titles: BTreeSet<&str> = a
        .entries
        .iter()
        .take(top_n)
        .chain(b.entries.iter().take(top_n))
        .map(|e| e.title.as_str())
        .collect();
    let mut html = String::from(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Articles for review</title>\n</head>\n<body>\n<ul>\n",
    );
    for title in &titles {
        let href = link_template.replace("{title}", &url_title(title));
        let _ = writeln!(
            html,
            "<li><a href=\"{}\">{}</a></li>",
            escape_html(&href),
            escape_html(title)
        );
    }
    html.push_str("</ul>\n</body>\n</html>\n");
    html
}

/// Number of distinct titles [`export_review_list`] would emit.
pub fn review_list_len(a: &RankedPredictions, b: &RankedPredictions, top_n: usize) -> usize {
    a.entries
        .iter()
        .take(top_n)
        .chain(b.entries.iter().take(top_n))
        .map(|e| e.title.as_str())
        .collect::<BTreeSet<_>>()
        .len()
}

fn url_title(title: &str) -> String {
    let mut out = String::with_capacity(title.len());
    for b in title.replace(' ', "_").bytes() {
        if b.is_ascii_alphanumeric() || b"_-.~()',:".contains(&b) {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}
