use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample statistics of one series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator), 0 for one value.
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("cannot summarize an empty series"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("series contains non-finite values"));
        }
        let n = values.len();
        let mean = pairwise_sum(values) / n as f64;
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let sd = if n > 1 { (pairwise_sum(&sq) / (n - 1) as f64).sqrt() } else { 0.0 };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            count: n,
            mean,
            sd,
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[n - 1],
        })
    }
}

/// Sum by recursive halving; the result depends only on the order of
/// `values`, not on how the work was scheduled.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (lo, hi) = values.split_at(values.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// Linear interpolation between order statistics at `(len - 1) q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
