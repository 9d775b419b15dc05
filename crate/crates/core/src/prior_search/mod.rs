//! Hill-climbing search for the prior pseudo-counts `(λ₋, λ₊)`.
//!
//! Each cell of the 203×203 grid is scored by leave-one-out PPV (with
//! sensitivity as tie-break) over the training set. The climber sweeps the
//! 5×5 block centred on its current best cell, moves to whichever cell beat
//! it, and stops after a sweep with no improvement. Scores are memoized per
//! cell, so a cell is evaluated at most once per experiment.

mod grid;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::ConfusionCounts;
use crate::nb_model::CountModel;

pub use grid::{Cell, CellScore, Grid, GRID_SIZE};

/// Half-width of the block swept around the centre.
pub const RADIUS: isize = 2;

pub trait Evaluator {
    fn evaluate(&self, cell: Cell) -> CellScore;
}

impl<F: Fn(Cell) -> CellScore> Evaluator for F {
    fn evaluate(&self, cell: Cell) -> CellScore {
        self(cell)
    }
}

/// Leave-one-out evaluation of a cell over the model's own training cases,
/// thresholding each held-out posterior at 0.5.
#[derive(Debug, Clone, Copy)]
pub struct LooEvaluator<'a> {
    model: &'a CountModel,
    grid: &'a Grid,
}

impl<'a> LooEvaluator<'a> {
    pub fn new(model: &'a CountModel, grid: &'a Grid) -> Self {
        Self { model, grid }
    }

    pub fn confusion(&self, cell: Cell) -> Result<ConfusionCounts> {
        let scorer = self.model.scorer(self.grid.hyperparameters(cell)?);
        let mut counts = ConfusionCounts::default();
        for (i, case) in self.model.cases().iter().enumerate() {
            counts.record(scorer.loo_score(i)?.class(), case.class);
        }
        Ok(counts)
    }
}

impl Evaluator for LooEvaluator<'_> {
    fn evaluate(&self, cell: Cell) -> CellScore {
        let counts = self
            .confusion(cell)
            .expect("search only visits in-bounds cells");
        CellScore::new(counts.ppv(), counts.sensitivity())
    }
}

/// Scores of every cell evaluated so far. Write-once per cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoTable {
    scores: BTreeMap<Cell, CellScore>,
}

impl MemoTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, cell: Cell) -> Option<CellScore> {
        self.scores.get(&cell).copied()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.scores.contains_key(&cell)
    }

    /// Stores `score` unless the cell already has one; returns the stored value.
    pub fn insert(&mut self, cell: Cell, score: CellScore) -> CellScore {
        *self.scores.entry(cell).or_insert(score)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.scores.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, CellScore)> + '_ {
        self.scores.iter().map(|(c, s)| (*c, *s))
    }

    pub fn merge(&mut self, other: &MemoTable) {
        for (cell, score) in other.iter() {
            self.insert(cell, score);
        }
    }

    /// CSV with columns `lambda_neg,lambda_pos,ppv,sensitivity`, in cell order.
    pub fn write_csv<W: Write>(&self, grid: &Grid, out: W) -> Result<()> {
        write_terrain(grid, self.iter(), out)
    }
}

pub(crate) fn write_terrain<W: Write>(
    grid: &Grid,
    rows: impl Iterator<Item = (Cell, CellScore)>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda_neg", "lambda_pos", "ppv", "sensitivity"])?;
    for (cell, score) in rows {
        let hp = grid.hyperparameters(cell)?;
        w.write_record([
            hp.lambda_neg.to_string(),
            hp.lambda_pos.to_string(),
            score.ppv.to_string(),
            score.sensitivity.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A memo table that several searches can fill concurrently. Two threads
/// may evaluate the same cell; the first stored score wins and, since
/// evaluation is deterministic, both scores are identical anyway.
#[derive(Debug, Default)]
pub struct SharedMemo {
    inner: Mutex<MemoTable>,
}

impl SharedMemo {
    pub fn new(memo: MemoTable) -> Self {
        Self {
            inner: Mutex::new(memo),
        }
    }

    pub fn into_inner(self) -> MemoTable {
        self.inner.into_inner().expect("memo lock poisoned")
    }
}

/// Where a search reads and records cell scores.
pub trait ScoreCache {
    /// Returns the cell's score and whether this call had to evaluate it.
    fn score(&mut self, cell: Cell, evaluator: &dyn Evaluator) -> (CellScore, bool);
}

impl ScoreCache for MemoTable {
    fn score(&mut self, cell: Cell, evaluator: &dyn Evaluator) -> (CellScore, bool) {
        match self.get(cell) {
            Some(s) => (s, false),
            None => (self.insert(cell, evaluator.evaluate(cell)), true),
        }
    }
}

impl ScoreCache for &SharedMemo {
    fn score(&mut self, cell: Cell, evaluator: &dyn Evaluator) -> (CellScore, bool) {
        if let Some(s) = self.inner.lock().expect("memo lock poisoned").get(cell) {
            return (s, false);
        }
        let fresh = evaluator.evaluate(cell);
        let stored = self.inner.lock().expect("memo lock poisoned").insert(cell, fresh);
        (stored, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchMove {
    pub from: Cell,
    pub to: Cell,
    pub from_score: CellScore,
    pub to_score: CellScore,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub start: Cell,
    pub best: Cell,
    pub best_score: CellScore,
    /// Cells this search evaluated itself (memo misses).
    pub evaluations: usize,
    pub moves: Vec<SearchMove>,
}

/// Climbs from `start` over a `size`×`size` grid.
///
/// Neighbours already present in `cache` are compared using their stored
/// score rather than re-evaluated, so sharing one cache between searches
/// never changes where any of them ends.
pub fn radial_gradient_search<C: ScoreCache>(
    start: Cell,
    size: usize,
    evaluator: &dyn Evaluator,
    cache: &mut C,
) -> Result<SearchOutcome> {
    if start.x >= size || start.y >= size {
        return Err(Error::CellOutOfBounds {
            x: start.x,
            y: start.y,
            size,
        });
    }
    let mut evaluations = 0;
    let mut lookup = |cell: Cell| {
        let (score, fresh) = cache.score(cell, evaluator);
        evaluations += usize::from(fresh);
        score
    };

    let mut best = start;
    let mut best_score = lookup(start);
    let mut moves = Vec::new();
    loop {
        let center = best;
        let mut improved = false;
        for i in -RADIUS..=RADIUS {
            for j in -RADIUS..=RADIUS {
                if i == 0 && j == 0 {
                    continue;
                }
                let (Some(x), Some(y)) = (
                    center.x.checked_add_signed(i),
                    center.y.checked_add_signed(j),
                ) else {
                    continue;
                };
                if x >= size || y >= size {
                    continue;
                }
                let cell = Cell { x, y };
                let score = lookup(cell);
                if score.beats(&best_score) {
                    moves.push(SearchMove {
                        from: best,
                        to: cell,
                        from_score: best_score,
                        to_score: score,
                    });
                    best = cell;
                    best_score = score;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(SearchOutcome {
        start,
        best,
        best_score,
        evaluations,
        moves,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartOutcome {
    pub best: Cell,
    pub best_score: CellScore,
    pub searches: Vec<SearchOutcome>,
}

impl MultiStartOutcome {
    fn from_searches(searches: Vec<SearchOutcome>) -> Result<Self> {
        let top = searches
            .iter()
            .max_by(|a, b| {
                a.best_score
                    .lex_cmp(&b.best_score)
                    .then(b.best.cmp(&a.best))
            })
            .ok_or_else(|| Error::InvalidArgument("no start cells given".into()))?;
        Ok(Self {
            best: top.best,
            best_score: top.best_score,
            searches,
        })
    }

    pub fn evaluations(&self) -> usize {
        self.searches.iter().map(|s| s.evaluations).sum()
    }

    /// One line per accepted move, grouped by start.
    pub fn write_log<W: Write>(&self, grid: &Grid, mut out: W) -> Result<()> {
        for s in &self.searches {
            let start = grid.hyperparameters(s.start)?;
            writeln!(
                out,
                "start ({}, {}) -> best ({}, {})",
                start.lambda_neg,
                start.lambda_pos,
                grid.value(s.best.x).unwrap_or(f64::NAN),
                grid.value(s.best.y).unwrap_or(f64::NAN),
            )?;
            for m in &s.moves {
                let (from, to) = (grid.hyperparameters(m.from)?, grid.hyperparameters(m.to)?);
                writeln!(
                    out,
                    "  move ({}, {}) ppv={} sens={} -> ({}, {}) ppv={} sens={}",
                    from.lambda_neg,
                    from.lambda_pos,
                    m.from_score.ppv,
                    m.from_score.sensitivity,
                    to.lambda_neg,
                    to.lambda_pos,
                    m.to_score.ppv,
                    m.to_score.sensitivity,
                )?;
            }
        }
        Ok(())
    }
}

/// Runs one search per start, in order, sharing `memo`. The merged best is
/// the lexicographic maximum; equal scores prefer the smaller cell.
pub fn multi_start_search(
    starts: &[Cell],
    size: usize,
    evaluator: &dyn Evaluator,
    memo: &mut MemoTable,
) -> Result<MultiStartOutcome> {
    let searches = starts
        .iter()
        .map(|&start| radial_gradient_search(start, size, evaluator, memo))
        .collect::<Result<Vec<_>>>()?;
    MultiStartOutcome::from_searches(searches)
}

/// Like [`multi_start_search`] with the starts running in parallel. Best
/// cells and the final memo contents are identical to the sequential run;
/// only the per-search evaluation counts may differ.
pub fn multi_start_search_parallel<E: Evaluator + Sync>(
    starts: &[Cell],
    size: usize,
    evaluator: &E,
    memo: MemoTable,
) -> Result<(MultiStartOutcome, MemoTable)> {
    let shared = SharedMemo::new(memo);
    let searches = starts
        .par_iter()
        .map(|&start| radial_gradient_search(start, size, evaluator, &mut &shared))
        .collect::<Result<Vec<_>>>()?;
    Ok((MultiStartOutcome::from_searches(searches)?, shared.into_inner()))
}

/// Mean score of a cell across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanScore {
    pub cell: Cell,
    pub ppv: f64,
    pub sensitivity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub best: MeanScore,
    /// Every cell explored under any seed, in cell order.
    pub terrain: Vec<MeanScore>,
}

impl Aggregate {
    pub fn write_csv<W: Write>(&self, grid: &Grid, out: W) -> Result<()> {
        write_terrain(
            grid,
            self.terrain
                .iter()
                .map(|m| (m.cell, CellScore::new(m.ppv, m.sensitivity))),
            out,
        )
    }
}

/// Averages cell scores over seeds. Every cell explored under any seed is
/// first evaluated under every other seed, so each mean covers all seeds.
/// Picks the highest mean PPV, then mean sensitivity, then the smallest cell.
pub fn aggregate_over_seeds<E: Evaluator + Sync>(
    memos: &mut [MemoTable],
    evaluators: &[E],
) -> Result<Aggregate> {
    if memos.is_empty() {
        return Err(Error::InvalidArgument("no per-seed memo tables".into()));
    }
    if memos.len() != evaluators.len() {
        return Err(Error::InvalidArgument(format!(
            "{} memo tables but {} evaluators",
            memos.len(),
            evaluators.len()
        )));
    }
    let union: BTreeSet<Cell> = memos.iter().flat_map(|m| m.cells()).collect();
    memos
        .par_iter_mut()
        .zip(evaluators.par_iter())
        .for_each(|(memo, evaluator)| {
            for &cell in &union {
                if !memo.contains(cell) {
                    memo.insert(cell, evaluator.evaluate(cell));
                }
            }
        });

    let seeds = memos.len() as f64;
    let terrain: Vec<MeanScore> = union
        .iter()
        .map(|&cell| {
            let (ppv, sens) = memos.iter().fold((0.0, 0.0), |(p, s), memo| {
                let score = memo.get(cell).expect("back-filled");
                (p + score.ppv, s + score.sensitivity)
            });
            MeanScore {
                cell,
                ppv: ppv / seeds,
                sensitivity: sens / seeds,
            }
        })
        .collect();
    let best = *terrain
        .iter()
        .max_by(|a, b| {
            a.ppv
                .total_cmp(&b.ppv)
                .then(a.sensitivity.total_cmp(&b.sensitivity))
                .then(b.cell.cmp(&a.cell))
        })
        .expect("union is nonempty when memos are");
    Ok(Aggregate { best, terrain })
}
