use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-neuron binned entropies in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyVector {
    pub values: Vec<f64>,
    pub n_bins: usize,
}

impl EntropyVector {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Plug-in Shannon entropy of a column discretized into `n_bins` equal-width
/// bins over `[min, max]`. Empty bins contribute nothing and a constant
/// column has entropy zero.
pub fn entropy(column: &[f64], n_bins: usize) -> Result<f64> {
    if column.is_empty() {
        return Err(Error::EmptyColumn);
    }
    if n_bins == 0 {
        return Err(Error::InvalidConfig("n_bins must be at least 1".into()));
    }
    let counts = bin_counts(column, n_bins);
    let s = column.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / s;
            p * (1.0 / p).ln()
        })
        .sum();
    Ok(h.clamp(0.0, (n_bins as f64).ln()))
}

/// Histogram counts; the maximum lands in the last bin.
pub(crate) fn bin_counts(column: &[f64], n_bins: usize) -> Vec<usize> {
    let (lo, hi) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mut counts = vec![0usize; n_bins];
    let width = hi - lo;
    if !(width > 0.0) {
        counts[0] = column.len();
        return counts;
    }
    for &v in column {
        counts[bin_index(v, lo, width, n_bins)] += 1;
    }
    counts
}

#[inline]
fn bin_index(v: f64, lo: f64, width: f64, n_bins: usize) -> usize {
    let b = ((v - lo) / width * n_bins as f64) as usize;
    b.min(n_bins - 1)
}
