use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which digamma correction the KSG sum uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiMode {
    /// `psi(max(e, 1))`: the marginal counts enter the digamma directly,
    /// clamped away from the pole at zero.
    #[default]
    PaperLiteral,
    /// `psi(e + 1)`: the original Kraskov estimator (algorithm 1).
    KsgCanonical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigammaMode {
    /// Recurrence plus asymptotic series, absolute error below 1e-10.
    #[default]
    Exact,
    /// `ln x - 1/(2x)`, the two-term large-x approximation.
    PaperApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Equal-width bins per neuron for the entropy.
    pub n_bins: usize,
    /// Neighbour rank for the KSG radius.
    pub k: usize,
    pub mi_mode: MiMode,
    pub digamma: DigammaMode,
    /// z-score every column before MI.
    pub normalize: bool,
    /// Add seeded tie-breaking noise before MI.
    pub jitter: bool,
    /// Noise half-width as a fraction of the column range.
    pub jitter_scale: f64,
    /// Uniformly subsample rows down to this many before analysis.
    pub max_samples: Option<usize>,
    pub seed: u64,
    /// Report negative MI estimates as zero.
    pub clamp_negative: bool,
    /// Also estimate I(A_i; A_i). Always uses the canonical correction.
    pub include_diagonal: bool,
    /// Keep the full MI matrix even above `FULL_MI_LIMIT` neurons.
    pub force_full_mi: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            n_bins: 100,
            k: 3,
            mi_mode: MiMode::PaperLiteral,
            digamma: DigammaMode::Exact,
            normalize: true,
            jitter: true,
            jitter_scale: 1e-10,
            max_samples: None,
            seed: 0,
            clamp_negative: false,
            include_diagonal: false,
            force_full_mi: false,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins == 0 {
            return Err(Error::InvalidConfig("n_bins must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.jitter_scale > 0.0 && self.jitter_scale.is_finite()) {
            return Err(Error::InvalidConfig("jitter_scale must be positive".into()));
        }
        if self.max_samples == Some(0) {
            return Err(Error::InvalidConfig("max_samples must be positive".into()));
        }
        Ok(())
    }

    /// Checks `k < samples`.
    pub fn check_samples(&self, samples: usize) -> Result<()> {
        if samples <= self.k {
            return Err(Error::TooFewSamples { samples, k: self.k });
        }
        Ok(())
    }
}
