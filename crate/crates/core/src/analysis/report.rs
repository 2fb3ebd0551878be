use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::ksg::{mi_prepared, PreparedColumn};
use crate::estimators::{entropy, EntropyVector, EstimatorConfig, MiMatrix, MiMode};
use crate::par::{map_indexed, Execution};
use crate::tensor_io::ActivationMatrix;

pub const REPORT_SCHEMA: &str = "actdiag-report/1";

/// Above this many neurons only a histogram of MI values is kept unless
/// `force_full_mi` is set.
pub const FULL_MI_LIMIT: usize = 1024;

const SUMMARY_BINS: usize = 256;

/// Pairwise MI, either in full or as a histogram with moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MiSummary {
    Full(MiMatrix),
    Histogram(MiHistogram),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiHistogram {
    pub pairs: usize,
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub mean: f64,
    pub variance: f64,
}

impl MiHistogram {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let mut counts = vec![0u64; SUMMARY_BINS];
        let width = hi - lo;
        for &v in values {
            let b = if width > 0.0 {
                (((v - lo) / width * SUMMARY_BINS as f64) as usize).min(SUMMARY_BINS - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        Self {
            pairs: n,
            lo,
            hi,
            counts,
            mean,
            variance,
        }
    }

    /// Bin centres repeated by count, a coarse stand-in for the raw values.
    pub fn expand(&self) -> Vec<f64> {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(b, &c)| std::iter::repeat_n(self.lo + (b as f64 + 0.5) * width, c as usize))
            .collect()
    }
}

/// Entropy and MI diagnostics for one activation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neuron_labels: Option<Vec<String>>,
    pub n_neurons: usize,
    /// Rows actually analysed, after any subsampling.
    pub n_samples: usize,
    pub config: EstimatorConfig,
    /// Per-neuron entropy in nats, `config.n_bins` bins.
    pub entropy: Vec<f64>,
    pub mean_entropy: f64,
    /// Mean over the N(N-1)/2 unordered off-diagonal pairs; absent when N < 2.
    pub mean_mi: Option<f64>,
    pub mi: MiSummary,
}

impl DiversityReport {
    pub fn entropy_vector(&self) -> EntropyVector {
        EntropyVector {
            values: self.entropy.clone(),
            n_bins: self.config.n_bins,
        }
    }

    /// Off-diagonal MI values: exact for a full matrix, bin centres for a
    /// histogram summary.
    pub fn mi_values(&self) -> Vec<f64> {
        match &self.mi {
            MiSummary::Full(m) => m.upper_triangle(),
            MiSummary::Histogram(h) => h.expand(),
        }
    }

    pub fn mi_matrix(&self) -> Option<&MiMatrix> {
        match &self.mi {
            MiSummary::Full(m) => Some(m),
            MiSummary::Histogram(_) => None,
        }
    }
}

/// Entropy of every neuron and KSG MI of every unordered neuron pair.
pub fn analyze(m: &ActivationMatrix, cfg: &EstimatorConfig) -> Result<DiversityReport> {
    analyze_with(m, cfg, Execution::Parallel)
}

pub fn analyze_with(
    m: &ActivationMatrix,
    cfg: &EstimatorConfig,
    exec: Execution,
) -> Result<DiversityReport> {
    cfg.validate()?;
    let subsampled;
    let m = match cfg.max_samples {
        Some(cap) if m.rows() > cap => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut rows = rand::seq::index::sample(&mut rng, m.rows(), cap).into_vec();
            rows.sort_unstable();
            subsampled = m.select_rows(&rows)?;
            &subsampled
        }
        _ => m,
    };
    let (s, n) = (m.rows(), m.cols());
    cfg.check_samples(s)?;

    let columns = m.columns();
    let entropy_values: Vec<f64> = map_indexed(exec, n, |c| {
        entropy(&columns[c], cfg.n_bins).expect("columns are non-empty")
    });
    let prepared: Vec<PreparedColumn> =
        map_indexed(exec, n, |c| PreparedColumn::new(&columns[c], cfg));

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let pair_mi: Vec<f64> = map_indexed(exec, pairs.len(), |p| {
        let (i, j) = pairs[p];
        mi_prepared(
            &prepared[i],
            &prepared[j],
            cfg.k,
            cfg.mi_mode,
            cfg.digamma,
            cfg.clamp_negative,
        )
    });
    let diagonal = cfg.include_diagonal.then(|| {
        map_indexed(exec, n, |i| {
            mi_prepared(
                &prepared[i],
                &prepared[i],
                cfg.k,
                MiMode::KsgCanonical,
                cfg.digamma,
                cfg.clamp_negative,
            )
        })
    });

    let mean_entropy = entropy_values.iter().sum::<f64>() / n as f64;
    let mean_mi = (!pair_mi.is_empty()).then(|| order_free_mean(&pair_mi));

    let mi = if n > FULL_MI_LIMIT && !cfg.force_full_mi {
        MiSummary::Histogram(MiHistogram::from_values(&pair_mi))
    } else {
        MiSummary::Full(MiMatrix::from_pairs(n, &pair_mi, diagonal.as_deref()))
    };

    Ok(DiversityReport {
        schema: REPORT_SCHEMA.to_string(),
        source: m.source().map(str::to_string),
        neuron_labels: m.neuron_labels().map(<[String]>::to_vec),
        n_neurons: n,
        n_samples: s,
        config: cfg.clone(),
        entropy: entropy_values,
        mean_entropy,
        mean_mi,
        mi,
    })
}

/// Mean summed in sorted order, so relabelling neurons leaves it unchanged.
fn order_free_mean(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}
