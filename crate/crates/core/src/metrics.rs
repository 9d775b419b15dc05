//! Confusion tallies, PPV, sensitivity and cumulative PPV over ranked lists.

use std::collections::HashSet;
use std::io::Write;

use crate::corpus::DocId;
use crate::error::{Error, Result};
use crate::nb_model::Class;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, predicted: Class, actual: Class) {
        match (predicted, actual) {
            (Class::Positive, Class::Positive) => self.tp += 1,
            (Class::Positive, Class::Negative) => self.fp += 1,
            (Class::Negative, Class::Negative) => self.tn += 1,
            (Class::Negative, Class::Positive) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `tp / (tp + fp)`, or 0 when nothing was predicted positive.
    pub fn ppv(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `tp / (tp + fn)`, or 0 when there are no actual positives.
    pub fn sensitivity(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_k(k: usize, len: usize) -> Result<()> {
    if k == 0 || k > len {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={len}"
        )));
    }
    Ok(())
}

/// Number of the first `k` ranked ids found in `truth`.
pub fn hits_at_k(ranked: &[DocId], truth: &HashSet<DocId>, k: usize) -> Result<usize> {
    check_k(k, ranked.len())?;
    Ok(ranked[..k].iter().filter(|id| truth.contains(id)).count())
}

pub fn ppv_at_k(ranked: &[DocId], truth: &HashSet<DocId>, k: usize) -> Result<f64> {
    Ok(hits_at_k(ranked, truth, k)? as f64 / k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub rank: usize,
    pub hits: usize,
    pub ppv: f64,
}

/// PPV at every cutoff `1..=K` of a ranked list.
#[derive(Debug, Clone, PartialEq)]
pub struct PpvProfile {
    pub points: Vec<ProfilePoint>,
}

impl PpvProfile {
    pub fn at(&self, rank: usize) -> Option<f64> {
        rank.checked_sub(1)
            .and_then(|i| self.points.get(i))
            .map(|p| p.ppv)
    }

    /// CSV with columns `rank,hits,ppv`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "hits", "ppv"])?;
        for p in &self.points {
            w.write_record([p.rank.to_string(), p.hits.to_string(), p.ppv.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn ppv_profile(ranked: &[DocId], truth: &HashSet<DocId>, max_k: usize) -> Result<PpvProfile> {
    check_k(max_k, ranked.len())?;
    let mut hits = 0;
    let points = ranked[..max_k]
        .iter()
        .enumerate()
        .map(|(i, id)| {
            hits += usize::from(truth.contains(id));
            ProfilePoint {
                rank: i + 1,
                hits,
                ppv: hits as f64 / (i + 1) as f64,
            }
        })
        .collect();
    Ok(PpvProfile { points })
}
