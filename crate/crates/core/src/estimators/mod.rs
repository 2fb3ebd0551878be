//! Information-theoretic estimators over single neurons and neuron pairs.

mod config;
mod digamma;
mod entropy;
pub mod ksg;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use config::{DigammaMode, EstimatorConfig, MiMode};
pub use digamma::digamma;
pub use entropy::{entropy, EntropyVector};
pub use ksg::{ksg_mi, PreparedColumn};

/// Whether `MiMatrix` carries values on its diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalPolicy {
    /// Diagonal holds NaN and never enters summaries.
    Excluded,
    Included,
}

/// Symmetric N×N matrix of pairwise MI estimates in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct MiMatrix {
    n: usize,
    values: Vec<f64>,
    diagonal: DiagonalPolicy,
}

impl MiMatrix {
    /// Builds the matrix from the upper triangle in row-major pair order
    /// `(0,1), (0,2), ..., (1,2), ...` and an optional diagonal.
    pub fn from_pairs(n: usize, pairs: &[f64], diagonal: Option<&[f64]>) -> Self {
        assert_eq!(pairs.len(), n * n.saturating_sub(1) / 2);
        let mut values = vec![f64::NAN; n * n];
        let mut idx = 0;
        for i in 0..n {
            for j in i + 1..n {
                values[i * n + j] = pairs[idx];
                values[j * n + i] = pairs[idx];
                idx += 1;
            }
        }
        let policy = match diagonal {
            Some(d) => {
                assert_eq!(d.len(), n);
                for (i, v) in d.iter().enumerate() {
                    values[i * n + i] = *v;
                }
                DiagonalPolicy::Included
            }
            None => DiagonalPolicy::Excluded,
        };
        Self {
            n,
            values,
            diagonal: policy,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn diagonal_policy(&self) -> DiagonalPolicy {
        self.diagonal
    }

    /// Row-major values, NaN on an excluded diagonal.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Off-diagonal values over unordered pairs, in pair order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct MiMatrixRepr {
    diagonal_policy: DiagonalPolicy,
    values: Vec<Vec<Option<f64>>>,
}

impl Serialize for MiMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let values = self
            .values
            .chunks(self.n.max(1))
            .map(|row| row.iter().map(|v| (!v.is_nan()).then_some(*v)).collect())
            .collect();
        MiMatrixRepr {
            diagonal_policy: self.diagonal,
            values,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MiMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = MiMatrixRepr::deserialize(d)?;
        let n = repr.values.len();
        if repr.values.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("MI matrix is not square"));
        }
        let values = repr
            .values
            .into_iter()
            .flatten()
            .map(|v| v.unwrap_or(f64::NAN))
            .collect();
        Ok(Self {
            n,
            values,
            diagonal: repr.diagonal_policy,
        })
    }
}
