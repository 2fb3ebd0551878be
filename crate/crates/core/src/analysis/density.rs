//! One-dimensional Gaussian mixtures over MI values.
//!
//! EM is run for every K in `1..=max_components` from k-means++ seeds, and
//! the fit with the lowest BIC wins (ties go to the smaller K).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-8;
pub const GMM_MAX_ITER: usize = 100;
pub const GMM_TOL: f64 = 1e-6;
const GRID_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

impl Component {
    fn log_pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * ((2.0 * std::f64::consts::PI * self.variance).ln() + d * d / self.variance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    pub components: Vec<Component>,
    /// `(x, density)` samples over `[min - 3σ, max + 3σ]`.
    pub grid: Vec<(f64, f64)>,
    pub chosen_k: usize,
    /// BIC of the best fit for each K tried, starting at K = 1.
    pub bic: Vec<f64>,
    /// Log-likelihood after each EM iteration of the chosen fit.
    pub log_likelihood: Vec<f64>,
    pub n_values: usize,
}

impl DensityModel {
    pub fn pdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.log_pdf(x).exp())
            .sum()
    }
}

pub fn fit_density(values: &[f64], max_components: usize, seed: u64) -> Result<DensityModel> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "density fit needs at least 2 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("density input must be finite".into()));
    }
    if max_components == 0 {
        return Err(Error::InvalidConfig(
            "max_components must be at least 1".into(),
        ));
    }
    let n = values.len() as f64;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });

    if lo == hi {
        let components = vec![Component {
            weight: 1.0,
            mean: lo,
            variance: VARIANCE_FLOOR,
        }];
        let grid = grid(&components, lo, hi, 0.0);
        return Ok(DensityModel {
            components,
            grid,
            chosen_k: 1,
            bic: vec![],
            log_likelihood: vec![],
            n_values: values.len(),
        });
    }

    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let k_max = max_components.min(distinct.len());

    let mut best: Option<(f64, Vec<Component>, Vec<f64>)> = None;
    let mut bics = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let init = kmeans_pp_init(values, k, &mut rng);
        let (components, trace) = em(values, init);
        let ll = *trace.last().expect("at least one iteration");
        let params = (3 * k - 1) as f64;
        let bic = -2.0 * ll + params * n.ln();
        bics.push(bic);
        if best.as_ref().is_none_or(|(b, _, _)| bic < *b) {
            best = Some((bic, components, trace));
        }
    }
    let (_, components, trace) = best.expect("k_max >= 1");

    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let grid = grid(&components, lo, hi, sd);
    Ok(DensityModel {
        chosen_k: components.len(),
        components,
        grid,
        bic: bics,
        log_likelihood: trace,
        n_values: values.len(),
    })
}

fn grid(components: &[Component], lo: f64, hi: f64, sample_sd: f64) -> Vec<(f64, f64)> {
    let widest = components
        .iter()
        .map(|c| c.variance.sqrt())
        .fold(sample_sd, f64::max);
    let (a, b) = (lo - 3.0 * widest, hi + 3.0 * widest);
    let step = (b - a) / (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS)
        .map(|i| {
            let x = a + step * i as f64;
            let d = components
                .iter()
                .map(|c| c.weight * c.log_pdf(x).exp())
                .sum();
            (x, d)
        })
        .collect()
}

/// Means by k-means++ (squared-distance weighted picks); shared variance and
/// equal weights.
fn kmeans_pp_init(values: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<Component> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).max(VARIANCE_FLOOR);

    let mut centers = vec![values[rng.random_range(0..values.len())]];
    let mut d2: Vec<f64> = values.iter().map(|v| (v - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = values.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..values.len())
        };
        let c = values[pick];
        centers.push(c);
        for (d, v) in d2.iter_mut().zip(values) {
            *d = d.min((v - c).powi(2));
        }
    }
    centers.sort_by(f64::total_cmp);
    centers
        .into_iter()
        .map(|mean| Component {
            weight: 1.0 / k as f64,
            mean,
            variance: var / (k * k) as f64,
        })
        .collect()
}

fn log_likelihood_and_resp(values: &[f64], comps: &[Component], resp: &mut [f64]) -> f64 {
    let k = comps.len();
    let mut ll = 0.0;
    let mut logs = vec![0.0; k];
    for (i, &x) in values.iter().enumerate() {
        for (l, c) in logs.iter_mut().zip(comps) {
            *l = if c.weight > 0.0 {
                c.weight.ln() + c.log_pdf(x)
            } else {
                f64::NEG_INFINITY
            };
        }
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = logs.iter().map(|l| (l - m).exp()).sum();
        let lse = m + s.ln();
        ll += lse;
        for (j, l) in logs.iter().enumerate() {
            resp[i * k + j] = (l - lse).exp();
        }
    }
    ll
}

/// EM from `comps`; returns the final parameters and the log-likelihood
/// trace, one entry per E step.
fn em(values: &[f64], mut comps: Vec<Component>) -> (Vec<Component>, Vec<f64>) {
    let k = comps.len();
    let n = values.len();
    let mut resp = vec![0.0; n * k];
    let mut trace = Vec::with_capacity(GMM_MAX_ITER + 1);
    let mut ll = log_likelihood_and_resp(values, &comps, &mut resp);
    trace.push(ll);
    for _ in 0..GMM_MAX_ITER {
        let mut next = comps.clone();
        for (j, c) in next.iter_mut().enumerate() {
            let nk: f64 = (0..n).map(|i| resp[i * k + j]).sum();
            if nk <= 0.0 {
                c.weight = 0.0;
                continue;
            }
            let mean = (0..n).map(|i| resp[i * k + j] * values[i]).sum::<f64>() / nk;
            let var = (0..n)
                .map(|i| resp[i * k + j] * (values[i] - mean).powi(2))
                .sum::<f64>()
                / nk;
            c.weight = nk / n as f64;
            c.mean = mean;
            c.variance = var.max(VARIANCE_FLOOR);
        }
        let total: f64 = next.iter().map(|c| c.weight).sum();
        next.iter_mut().for_each(|c| c.weight /= total);

        let next_ll = log_likelihood_and_resp(values, &next, &mut resp);
        comps = next;
        trace.push(next_ll);
        let done = (next_ll - ll).abs() <= GMM_TOL * ll.abs().max(1.0);
        ll = next_ll;
        if done {
            break;
        }
    }
    comps.retain(|c| c.weight > 0.0);
    (comps, trace)
}
