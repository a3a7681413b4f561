//! Error summaries: percentiles by linear interpolation of the empirical CDF.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Percentile `q` in [0, 1] of ascending `sorted`, interpolating between
/// order statistics at rank `(n - 1) q`.
pub fn percentile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Domain("percentile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile {q} outside [0, 1]")));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub median: f64,
    pub p80: f64,
    pub mean: f64,
    pub max: f64,
    /// `(value, fraction of samples <= value)`, ascending.
    pub cdf: Vec<(f64, f64)>,
}

impl Summary {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("summary of an empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("NaN in sample".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let cdf = sorted
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, (i + 1) as f64 / n as f64))
            .collect();
        Ok(Self {
            count: n,
            median: percentile(&sorted, 0.5)?,
            p80: percentile(&sorted, 0.8)?,
            mean: sorted.iter().sum::<f64>() / n as f64,
            max: sorted[n - 1],
            cdf,
        })
    }
}

/// Median of an unsorted sample.
pub fn median(values: &[f64]) -> Result<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile(&sorted, 0.5)
}
