//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use nbprior::corpus::{DocId, Document};
use nbprior::nb_model::Hyperparameters;
use nbprior::prior_search::{Cell, CellScore, GRID_SIZE};
use nbprior::rng;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

pub fn doc(id: DocId, text: &str) -> Document {
    Document::from_text(id, format!("Doc {id}"), text)
}

pub fn hp(neg: f64, pos: f64) -> Hyperparameters {
    Hyperparameters::new(neg, pos).unwrap()
}

/// Exact value of an `f64`, so the oracle sees the same λ the code does.
pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

pub fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

/// Counts tallied straight from the documents over a fixed feature set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub features: BTreeSet<String>,
    pub n_pos: u64,
    pub n_neg: u64,
    pub pos: BTreeMap<String, u64>,
    pub neg: BTreeMap<String, u64>,
}

pub fn positive_union(positives: &[&Document]) -> BTreeSet<String> {
    positives.iter().flat_map(|d| d.tokens.iter().cloned()).collect()
}

pub fn tally(features: &BTreeSet<String>, positives: &[&Document], negatives: &[&Document]) -> Tally {
    let count = |docs: &[&Document]| {
        features
            .iter()
            .map(|t| (t.clone(), docs.iter().filter(|d| d.tokens.contains(t)).count() as u64))
            .collect::<BTreeMap<_, _>>()
    };
    Tally {
        features: features.clone(),
        n_pos: positives.len() as u64,
        n_neg: negatives.len() as u64,
        pos: count(positives),
        neg: count(negatives),
    }
}

impl Tally {
    pub fn cond_prob(&self, token: &str, positive: bool, hp: &Hyperparameters) -> BigRational {
        let (lambda, n_t, n) = if positive {
            (exact(hp.lambda_pos), self.pos[token], self.n_pos)
        } else {
            (exact(hp.lambda_neg), self.neg[token], self.n_neg)
        };
        (lambda.clone() + int(n_t)) / (lambda + int(n))
    }

    pub fn class_prior(&self, positive: bool, hp: &Hyperparameters) -> BigRational {
        let (lp, ln) = (exact(hp.lambda_pos), exact(hp.lambda_neg));
        let num = if positive {
            lp.clone() + int(self.n_pos)
        } else {
            ln.clone() + int(self.n_neg)
        };
        num / (lp + ln + int(self.n_pos + self.n_neg))
    }

    /// Exact positive posterior by direct products over the case's
    /// intersection with the feature set.
    pub fn p_pos(&self, tokens: &BTreeSet<String>, hp: &Hyperparameters) -> BigRational {
        let mut pos = self.class_prior(true, hp);
        let mut neg = self.class_prior(false, hp);
        for t in tokens.iter().filter(|t| self.features.contains(*t)) {
            pos *= self.cond_prob(t, true, hp);
            neg *= self.cond_prob(t, false, hp);
        }
        pos.clone() / (pos + neg)
    }
}

/// A small random training set over a tiny vocabulary, for oracle sweeps.
/// Positives lean on the first half of the vocabulary.
pub fn random_fixture(seed: u64, n_pos: usize, n_neg: usize, vocab: usize) -> (Vec<Document>, Vec<Document>) {
    let mut r = rng::seeded(seed);
    let mut make = |id: DocId, positive: bool| {
        let len = 1 + rng::below(&mut r, 8) as usize;
        let tokens: BTreeSet<String> = (0..len)
            .map(|_| {
                let lean = positive && rng::unit(&mut r) < 0.6;
                let range = if lean { vocab.div_ceil(2) } else { vocab };
                format!("t{}", rng::below(&mut r, range as u64))
            })
            .collect();
        Document::new(id, format!("Doc {id}"), tokens)
    };
    let pos = (0..n_pos).map(|i| make(i as DocId, true)).collect();
    let neg = (0..n_neg).map(|i| make((n_pos + i) as DocId, false)).collect();
    (pos, neg)
}

/// Cheap evaluator surfaces over the standard grid.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub cx: f64,
    pub cy: f64,
    pub sx: f64,
    pub sy: f64,
    pub height: f64,
}

impl Bump {
    pub fn at(&self, cell: Cell) -> f64 {
        let dx = (cell.x as f64 - self.cx) / self.sx;
        let dy = (cell.y as f64 - self.cy) / self.sy;
        self.height / (1.0 + dx * dx + dy * dy)
    }
}

#[derive(Debug, Clone)]
pub struct Surface {
    pub bumps: Vec<Bump>,
}

impl Surface {
    pub fn unimodal(seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        let c = |r: &mut rng::Rng| rng::below(r, GRID_SIZE as u64) as f64;
        let s = |r: &mut rng::Rng| 3.0 + 40.0 * rng::unit(r);
        Self {
            bumps: vec![Bump { cx: c(&mut r), cy: c(&mut r), sx: s(&mut r), sy: s(&mut r), height: 1.0 }],
        }
    }

    /// A tall and a short bump with integer centres at least 40 cells apart.
    /// The tall one sits in the low corner, near the default starts.
    pub fn two_bump(seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        let c = |r: &mut rng::Rng, hi: usize| rng::below(r, hi as u64) as f64;
        loop {
            let a = (c(&mut r, 60), c(&mut r, 60));
            let b = (c(&mut r, GRID_SIZE), c(&mut r, GRID_SIZE));
            if (a.0 - b.0).abs().max((a.1 - b.1).abs()) < 40.0 {
                continue;
            }
            let w = 15.0 + 30.0 * rng::unit(&mut r);
            let v = 8.0 + 25.0 * rng::unit(&mut r);
            return Self {
                bumps: vec![
                    Bump { cx: a.0, cy: a.1, sx: w, sy: w, height: 1.0 },
                    Bump { cx: b.0, cy: b.1, sx: v, sy: v, height: 0.6 + 0.3 * rng::unit(&mut r) },
                ],
            };
        }
    }

    pub fn ppv(&self, cell: Cell) -> f64 {
        self.bumps.iter().map(|b| b.at(cell)).fold(0.0, f64::max)
    }

    /// Sensitivity falls along `x` so that equal-PPV cells still order.
    pub fn score(&self, cell: Cell) -> CellScore {
        CellScore::new(self.ppv(cell), 1.0 - cell.x as f64 / GRID_SIZE as f64)
    }

    /// Lexicographic argmax over every cell, smallest cell on ties.
    pub fn brute_force(&self) -> (Cell, CellScore) {
        let mut best = (Cell::new(0, 0), self.score(Cell::new(0, 0)));
        for x in 0..GRID_SIZE {
            for y in 0..GRID_SIZE {
                let cell = Cell::new(x, y);
                let s = self.score(cell);
                if s.beats(&best.1) {
                    best = (cell, s);
                }
            }
        }
        best
    }

    /// No cell of the 5×5 block around `cell` strictly beats it.
    pub fn is_local_max(&self, cell: Cell) -> bool {
        let s = self.score(cell);
        (-2isize..=2).all(|i| {
            (-2isize..=2).all(|j| {
                match (cell.x.checked_add_signed(i), cell.y.checked_add_signed(j)) {
                    (Some(x), Some(y)) if x < GRID_SIZE && y < GRID_SIZE => !self.score(Cell::new(x, y)).beats(&s),
                    _ => true,
                }
            })
        })
    }

    /// Cells whose score exceeds every other bump's peak: an ascent from
    /// here can only end at the tallest bump's top.
    pub fn in_global_basin(&self, cell: Cell) -> bool {
        let tallest = self
            .bumps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.height.total_cmp(&b.1.height))
            .map(|(i, _)| i)
            .unwrap();
        let others = self
            .bumps
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != tallest)
            .map(|(_, b)| b.height)
            .fold(0.0, f64::max);
        self.ppv(cell) > others
    }
}
