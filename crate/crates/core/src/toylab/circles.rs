use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_io::ActivationMatrix;

/// Training-set corruption. The knob lives inside the variant it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Variant {
    Base,
    /// Appends a ±1 feature that agrees with the label on an `alpha`
    /// fraction of training rows and is a label-independent coin flip on the
    /// rest, so `alpha = 0` carries no shortcut at all.
    Spurious {
        alpha: f64,
    },
    /// Reassigns a `beta` fraction of training labels uniformly at random.
    Shuffled {
        beta: f64,
    },
}

impl Variant {
    pub fn n_features(self) -> usize {
        match self {
            Variant::Spurious { .. } => 3,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Spurious { .. } => "spurious",
            Variant::Shuffled { .. } => "shuffled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirclesConfig {
    pub n_train: usize,
    pub n_test: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub noise_sigma: f64,
    #[serde(flatten)]
    pub variant: Variant,
    pub seed: u64,
}

impl Default for CirclesConfig {
    fn default() -> Self {
        Self {
            n_train: 1000,
            n_test: 1000,
            inner_radius: 1.0,
            outer_radius: 2.0,
            noise_sigma: 0.1,
            variant: Variant::Base,
            seed: 0,
        }
    }
}

impl CirclesConfig {
    /// Defaults for a variant; shuffled runs get the small training set a
    /// tiny network can memorise.
    pub fn for_variant(variant: Variant, seed: u64) -> Self {
        let n_train = match variant {
            Variant::Shuffled { .. } => 200,
            _ => 1000,
        };
        Self {
            n_train,
            variant,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_train == 0 || self.n_test == 0 {
            return bad("dataset sizes must be positive");
        }
        if !(self.inner_radius > 0.0 && self.inner_radius < self.outer_radius) {
            return bad("need 0 < inner_radius < outer_radius");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be non-negative");
        }
        match self.variant {
            Variant::Spurious { alpha: f } | Variant::Shuffled { beta: f }
                if !(0.0..=1.0).contains(&f) =>
            {
                bad("alpha/beta must lie in [0, 1]")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Row-major `n × n_features` inputs with binary labels (0 = inner circle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Vec<f64>,
    pub n_features: usize,
    pub labels: Vec<u8>,
    pub split: Split,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn input_matrix(&self) -> Result<ActivationMatrix> {
        ActivationMatrix::new(self.len(), self.n_features, self.inputs.clone())
    }
}

/// Train and test sets. Test labels are never corrupted.
pub fn gen_circles(cfg: &CirclesConfig) -> Result<(Dataset, Dataset)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("sigma validated");

    let (train_pts, mut train_labels) = rings(cfg, cfg.n_train, &noise, &mut rng);
    let (test_pts, test_labels) = rings(cfg, cfg.n_test, &noise, &mut rng);

    let (train_inputs, test_inputs, n_features) = match cfg.variant {
        Variant::Spurious { alpha } => {
            let agree = fraction_mask(cfg.n_train, alpha, &mut rng);
            let train_extra: Vec<f64> = train_labels
                .iter()
                .zip(&agree)
                .map(|(&l, &a)| if a { shortcut_sign(l) } else { coin(&mut rng) })
                .collect();
            let test_extra: Vec<f64> = (0..cfg.n_test).map(|_| coin(&mut rng)).collect();
            (
                append(&train_pts, &train_extra),
                append(&test_pts, &test_extra),
                3,
            )
        }
        _ => (flatten(&train_pts), flatten(&test_pts), 2),
    };

    if let Variant::Shuffled { beta } = cfg.variant {
        let reassigned = fraction_mask(cfg.n_train, beta, &mut rng);
        for (label, r) in train_labels.iter_mut().zip(reassigned) {
            if r {
                *label = u8::from(rng.random::<bool>());
            }
        }
    }

    Ok((
        Dataset {
            inputs: train_inputs,
            n_features,
            labels: train_labels,
            split: Split::Train,
        },
        Dataset {
            inputs: test_inputs,
            n_features,
            labels: test_labels,
            split: Split::Test,
        },
    ))
}

fn shortcut_sign(label: u8) -> f64 {
    if label == 0 {
        1.0
    } else {
        -1.0
    }
}

fn coin(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// `floor(n/2)` inner and `ceil(n/2)` outer points in shuffled order.
fn rings(
    cfg: &CirclesConfig,
    n: usize,
    noise: &Normal<f64>,
    rng: &mut ChaCha8Rng,
) -> (Vec<[f64; 2]>, Vec<u8>) {
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i >= n / 2)).collect();
    labels.shuffle(rng);
    let pts = labels
        .iter()
        .map(|&l| {
            let r = if l == 0 {
                cfg.inner_radius
            } else {
                cfg.outer_radius
            } + noise.sample(rng);
            let t = rng.random::<f64>() * TAU;
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    (pts, labels)
}

/// Exactly `round(frac * n)` true entries at random positions.
fn fraction_mask(n: usize, frac: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let hits = (frac * n as f64).round() as usize;
    let mut mask: Vec<bool> = (0..n).map(|i| i < hits).collect();
    mask.shuffle(rng);
    mask
}

fn flatten(pts: &[[f64; 2]]) -> Vec<f64> {
    pts.iter().flatten().copied().collect()
}

fn append(pts: &[[f64; 2]], extra: &[f64]) -> Vec<f64> {
    pts.iter()
        .zip(extra)
        .flat_map(|(p, &e)| [p[0], p[1], e])
        .collect()
}
