use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::nb_model::Hyperparameters;

pub const GRID_SIZE: usize = 203;

/// Candidate pseudo-counts: 0.01, 0.1, 0.5, then every integer 1..=200.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    values: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self::standard()
    }
}

impl Grid {
    pub fn standard() -> Self {
        let mut values = vec![0.01, 0.1, 0.5];
        values.extend((1..=200).map(f64::from));
        debug_assert_eq!(values.len(), GRID_SIZE);
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> Option<f64> {
        self.values.get(index).copied()
    }

    pub fn index_of(&self, value: f64) -> Option<usize> {
        self.values.iter().position(|&v| v == value)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.len() && cell.y < self.len()
    }

    pub fn check(&self, cell: Cell) -> Result<()> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(Error::CellOutOfBounds {
                x: cell.x,
                y: cell.y,
                size: self.len(),
            })
        }
    }

    pub fn hyperparameters(&self, cell: Cell) -> Result<Hyperparameters> {
        self.check(cell)?;
        Hyperparameters::new(self.values[cell.x], self.values[cell.y])
    }

    /// Cell holding the given `(λ₋, λ₊)` pair.
    pub fn cell_for(&self, lambda_neg: f64, lambda_pos: f64) -> Result<Cell> {
        let x = self.index_of(lambda_neg).ok_or(Error::NotOnGrid(lambda_neg))?;
        let y = self.index_of(lambda_pos).ok_or(Error::NotOnGrid(lambda_pos))?;
        Ok(Cell { x, y })
    }

    pub fn bayes_laplace(&self) -> Cell {
        self.cell_for(1.0, 1.0).expect("grid contains 1")
    }

    pub fn jeffreys(&self) -> Cell {
        self.cell_for(0.5, 0.5).expect("grid contains 0.5")
    }

    /// The nine starting cells at `(λ₋, λ₊) ∈ {1, 8, 15}²`.
    pub fn default_starts(&self) -> Vec<Cell> {
        const STARTS: [f64; 3] = [1.0, 8.0, 15.0];
        STARTS
            .iter()
            .flat_map(|&neg| STARTS.iter().map(move |&pos| (neg, pos)))
            .map(|(neg, pos)| self.cell_for(neg, pos).expect("start values lie on the grid"))
            .collect()
    }
}

/// Grid coordinates: `x` indexes λ₋, `y` indexes λ₊.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Chebyshev distance.
    pub fn distance(&self, other: Cell) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

/// Leave-one-out result of one grid cell. Ordered by PPV, then sensitivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellScore {
    pub ppv: f64,
    pub sensitivity: f64,
}

impl CellScore {
    pub fn new(ppv: f64, sensitivity: f64) -> Self {
        Self { ppv, sensitivity }
    }

    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.ppv
            .total_cmp(&other.ppv)
            .then(self.sensitivity.total_cmp(&other.sensitivity))
    }

    /// Strictly better: higher PPV, or equal PPV and higher sensitivity.
    pub fn beats(&self, other: &Self) -> bool {
        self.lex_cmp(other) == Ordering::Greater
    }
}
