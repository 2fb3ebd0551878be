use serde::{Deserialize, Serialize};

use super::DiversityReport;
use crate::error::{Error, Result};

/// Which direction of each information measure is expected to track better
/// generalisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Shortcut reliance lowers entropy and raises MI, so MI is negated.
    #[default]
    Heuristic,
    /// Fitting individual examples raises entropy and lowers MI, so entropy
    /// is negated.
    ExampleLevel,
    /// No measure is negated.
    Raw,
}

impl Orientation {
    /// `(negate entropy, negate MI)`.
    pub fn negations(self) -> (bool, bool) {
        match self {
            Orientation::Heuristic => (false, true),
            Orientation::ExampleLevel => (true, false),
            Orientation::Raw => (false, false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureTau {
    pub measure: String,
    /// Whether the measure was negated before ranking.
    pub negated: bool,
    /// Kendall tau-b of the oriented measure against the extrinsic metric.
    pub tau: f64,
    /// Tau of the measure as reported, before any negation.
    pub raw_tau: f64,
    pub abs_tau: f64,
    /// Sample Pearson correlation, when both sides vary.
    pub pearson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub orientation: Orientation,
    pub model_ids: Vec<String>,
    pub measures: Vec<MeasureTau>,
}

impl RankingResult {
    pub fn get(&self, measure: &str) -> Option<&MeasureTau> {
        self.measures.iter().find(|m| m.measure == measure)
    }
}

/// Tie-adjusted Kendall tau-b by direct pair counting.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData(
            "rank correlation needs two points".into(),
        ));
    }
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut untied_a, mut untied_b) = (0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let sa = sign(a[i] - a[j]);
            let sb = sign(b[i] - b[j]);
            untied_a += i64::from(sa != 0);
            untied_b += i64::from(sb != 0);
            match sa * sb {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    if untied_a == 0 || untied_b == 0 {
        return Err(Error::AllTied);
    }
    let tau = (concordant - discordant) as f64 / ((untied_a as f64) * (untied_b as f64)).sqrt();
    Ok(tau.clamp(-1.0, 1.0))
}

fn sign(d: f64) -> i32 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData(
            "correlation needs two points".into(),
        ));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Rank correlation of each named measure against `extrinsic`. Each entry is
/// `(name, values, negate)`.
pub fn rank_measures(
    extrinsic: &[f64],
    measures: &[(&str, Vec<f64>, bool)],
) -> Result<Vec<MeasureTau>> {
    measures
        .iter()
        .map(|(name, values, negate)| {
            let oriented: Vec<f64> = if *negate {
                values.iter().map(|v| -v).collect()
            } else {
                values.clone()
            };
            let tau = kendall_tau(extrinsic, &oriented)?;
            Ok(MeasureTau {
                measure: (*name).to_string(),
                negated: *negate,
                tau,
                raw_tau: if *negate { -tau } else { tau },
                abs_tau: tau.abs(),
                pearson: pearson(extrinsic, &oriented).ok(),
            })
        })
        .collect()
}

/// Correlates an extrinsic metric (higher is better) with the mean entropy
/// and mean MI of each model's report, aligned by model id.
pub fn rank_models(
    reports: &[(String, DiversityReport)],
    extrinsic: &[(String, f64)],
    orientation: Orientation,
) -> Result<RankingResult> {
    if extrinsic.len() < 2 {
        return Err(Error::InsufficientData(
            "ranking needs at least two models".into(),
        ));
    }
    if reports.len() != extrinsic.len() {
        return Err(Error::IdMismatch(format!(
            "{} reports but {} extrinsic metrics",
            reports.len(),
            extrinsic.len()
        )));
    }
    let mut metric = Vec::with_capacity(extrinsic.len());
    let mut entropy = Vec::with_capacity(extrinsic.len());
    let mut mi = Vec::with_capacity(extrinsic.len());
    for (idx, (id, value)) in extrinsic.iter().enumerate() {
        if extrinsic[..idx].iter().any(|(other, _)| other == id) {
            return Err(Error::IdMismatch(format!("duplicate model id '{id}'")));
        }
        let (_, report) = reports
            .iter()
            .find(|(rid, _)| rid == id)
            .ok_or_else(|| Error::IdMismatch(format!("no report for model '{id}'")))?;
        metric.push(*value);
        entropy.push(report.mean_entropy);
        mi.push(report.mean_mi.ok_or_else(|| {
            Error::InsufficientData(format!("model '{id}' has fewer than two neurons"))
        })?);
    }
    let (neg_h, neg_mi) = orientation.negations();
    let measures = rank_measures(
        &metric,
        &[("mean_entropy", entropy, neg_h), ("mean_mi", mi, neg_mi)],
    )?;
    Ok(RankingResult {
        orientation,
        model_ids: extrinsic.iter().map(|(id, _)| id.clone()).collect(),
        measures,
    })
}
