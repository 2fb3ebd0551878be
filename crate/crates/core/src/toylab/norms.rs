use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MlpModel;

const POWER_ITERATIONS: usize = 200;
const POWER_TOL: f64 = 1e-9;

/// Norm-based complexity baselines, each a product over layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityNorms {
    pub two_norm: f64,
    pub frobenius_norm: f64,
    pub path_norm: f64,
}

pub fn complexity_norms(model: &MlpModel) -> ComplexityNorms {
    let mut two_norm = 1.0;
    let mut frobenius_norm = 1.0;
    // forward pass with squared weights, no biases, all-ones input; the
    // rectifier is the identity on non-negative values
    let mut path = vec![1.0; model.n_inputs()];
    for l in 0..model.n_layers() {
        let (w, _) = model.layer(l);
        let (n_in, n_out) = (model.sizes[l], model.sizes[l + 1]);
        two_norm *= spectral_norm(w, n_out, n_in);
        frobenius_norm *= w.iter().map(|x| x * x).sum::<f64>().sqrt();
        path = (0..n_out)
            .map(|r| {
                w[r * n_in..(r + 1) * n_in]
                    .iter()
                    .zip(&path)
                    .map(|(a, p)| a * a * p)
                    .sum()
            })
            .collect();
    }
    ComplexityNorms {
        two_norm,
        frobenius_norm,
        path_norm: path.iter().sum::<f64>().sqrt(),
    }
}

/// Largest singular value of a `rows × cols` row-major matrix by power
/// iteration on `WᵀW`.
pub fn spectral_norm(w: &[f64], rows: usize, cols: usize) -> f64 {
    assert_eq!(w.len(), rows * cols);
    if w.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..cols).map(|_| rng.random::<f64>() + 0.5).collect();
    normalize(&mut v);
    let mut sigma = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let wv: Vec<f64> = (0..rows)
            .map(|r| {
                w[r * cols..(r + 1) * cols]
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        let mut next = vec![0.0; cols];
        for (r, u) in wv.iter().enumerate() {
            for (c, slot) in next.iter_mut().enumerate() {
                *slot += w[r * cols + c] * u;
            }
        }
        let next_sigma = wv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if normalize(&mut next) == 0.0 {
            break;
        }
        v = next;
        let done = (next_sigma - sigma).abs() <= POWER_TOL * next_sigma;
        sigma = next_sigma;
        if done {
            break;
        }
    }
    // Rayleigh estimate with the final vector
    (0..rows)
        .map(|r| {
            let s: f64 = w[r * cols..(r + 1) * cols]
                .iter()
                .zip(&v)
                .map(|(a, b)| a * b)
                .sum();
            s * s
        })
        .sum::<f64>()
        .sqrt()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}
