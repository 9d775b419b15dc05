//! Bootstrap confidence intervals and Welch's t-test over top-k hit vectors.

use std::io::Write;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_RESAMPLES: usize = 10_000;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Hit indicators of a ranked list: entry `i` is true iff rank `i + 1` is a
/// true positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeVector(Vec<bool>);

impl OutcomeVector {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidArgument("outcome vector is empty".into()));
        }
        Ok(Self(bits))
    }

    /// `hits` ones followed by `len - hits` zeros.
    pub fn with_hits(len: usize, hits: usize) -> Result<Self> {
        if hits > len {
            return Err(Error::InvalidArgument(format!("{hits} hits in {len} ranks")));
        }
        Self::new((0..len).map(|i| i < hits).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn hits(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn mean(&self) -> f64 {
        self.hits() as f64 / self.len() as f64
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Unbiased sample variance.
    fn variance(&self) -> f64 {
        let n = self.len() as f64;
        let m = self.mean();
        self.0
            .iter()
            .map(|&b| (f64::from(u8::from(b)) - m).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapCi {
    pub lo: f64,
    pub hi: f64,
    pub resamples: usize,
    pub alpha: f64,
}

impl BootstrapCi {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Percentile bootstrap interval for the mean of `v`.
pub fn bootstrap_ci(v: &OutcomeVector, resamples: usize, alpha: f64, seed: u64) -> Result<BootstrapCi> {
    if resamples == 0 {
        return Err(Error::InvalidArgument("need at least one resample".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    let k = v.len();
    let mut rng = rng::seeded(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let hits = (0..k)
                .filter(|_| v.0[rng::below(&mut rng, k as u64) as usize])
                .count();
            hits as f64 / k as f64
        })
        .collect();
    means.sort_unstable_by(f64::total_cmp);
    Ok(BootstrapCi {
        lo: quantile(&means, alpha / 2.0),
        hi: quantile(&means, 1.0 - alpha / 2.0),
        resamples,
        alpha,
    })
}

/// Linear interpolation between order statistics (Hyndman-Fan type 7).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Two-sided Welch t-test p-value for a difference in means.
///
/// When both vectors are constant the test degenerates: equal means give
/// `p = 1`, different means give `p = 0`.
pub fn significance_test(baseline: &OutcomeVector, study: &OutcomeVector) -> Result<f64> {
    if baseline.len() < 2 || study.len() < 2 {
        return Err(Error::InvalidArgument(
            "t-test needs at least two outcomes per vector".into(),
        ));
    }
    let (n1, n2) = (baseline.len() as f64, study.len() as f64);
    let (v1, v2) = (baseline.variance() / n1, study.variance() / n2);
    let diff = study.mean() - baseline.mean();
    let se2 = v1 + v2;
    if se2 == 0.0 {
        return Ok(if diff == 0.0 { 1.0 } else { 0.0 });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (v1 * v1 / (n1 - 1.0) + v2 * v2 / (n2 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::InvalidArgument(format!("t distribution: {e}")))?;
    Ok((2.0 * dist.sf(t.abs())).min(1.0))
}

/// One row of the stats report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: String,
    pub k: usize,
    pub ppv: f64,
    pub ci: BootstrapCi,
    pub p_value: f64,
}

/// CSV with columns `model,k,ppv,ci_lo,ci_hi,p_value`.
pub fn write_report<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "k", "ppv", "ci_lo", "ci_hi", "p_value"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.k.to_string(),
            r.ppv.to_string(),
            r.ci.lo.to_string(),
            r.ci.hi.to_string(),
            r.p_value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
