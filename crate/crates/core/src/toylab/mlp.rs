//! Dense rectifier network with a sigmoid output, trained with Adam on
//! binary cross-entropy. Backpropagation is written out by hand.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor_io::ActivationMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            hidden: vec![16, 16],
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 500,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl Hyper {
    /// Recipe for the label-shuffling runs: wider layers and longer
    /// full-batch training at a higher rate, so 200 random labels can
    /// actually be memorised.
    pub fn memorizing() -> Self {
        Self {
            hidden: vec![64, 64],
            learning_rate: 1e-2,
            batch_size: 200,
            epochs: 4000,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("hidden widths must be >= 1".into()));
        }
        if self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(
                "batch_size and learning_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Mean training loss per epoch.
    pub train_loss: Vec<f64>,
    /// `(epoch, mean held-out loss)` every few epochs and after the last
    /// one, when a test set was given.
    pub test_loss: Vec<(usize, f64)>,
}

/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs. Parameters are
/// stored flat: for each layer its `out × in` row-major weights, then its
/// biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
    pub seed: u64,
    pub hyper: Hyper,
    pub trace: TrainTrace,
}

impl MlpModel {
    /// He-normal weights, zero biases.
    pub fn init(n_inputs: usize, hyper: &Hyper, seed: u64) -> Self {
        let mut sizes = vec![n_inputs];
        sizes.extend(&hyper.hidden);
        sizes.push(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            params.extend((0..fan_in * fan_out).map(|_| dist.sample(&mut rng)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self {
            sizes,
            params,
            seed,
            hyper: hyper.clone(),
            trace: TrainTrace::default(),
        }
    }

    /// Builds a model from explicit per-layer `(weights, biases)`.
    pub fn from_layers(layers: &[(Vec<Vec<f64>>, Vec<f64>)]) -> Result<Self> {
        let mut sizes = Vec::new();
        let mut params = Vec::new();
        for (w, b) in layers {
            let n_in = w.first().map_or(0, Vec::len);
            if w.len() != b.len() || w.iter().any(|r| r.len() != n_in) || n_in == 0 {
                return Err(Error::InvalidConfig("inconsistent layer shapes".into()));
            }
            match sizes.last() {
                None => sizes.push(n_in),
                Some(&prev) if prev != n_in => {
                    return Err(Error::InvalidConfig("layer shapes do not chain".into()))
                }
                _ => {}
            }
            sizes.push(w.len());
            params.extend(w.iter().flatten());
            params.extend(b);
        }
        Ok(Self {
            hyper: Hyper {
                hidden: sizes[1..sizes.len() - 1].to_vec(),
                ..Hyper::default()
            },
            sizes,
            params,
            seed: 0,
            trace: TrainTrace::default(),
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_hidden(&self) -> usize {
        self.n_layers() - 1
    }

    /// Offset of layer `l`'s weights in `params`.
    fn offset(&self, l: usize) -> usize {
        self.sizes
            .windows(2)
            .take(l)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// `(weights, biases)` of layer `l`; weights are `out × in` row-major.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        let o = self.offset(l);
        (
            &self.params[o..o + n_in * n_out],
            &self.params[o + n_in * n_out..o + n_in * n_out + n_out],
        )
    }

    /// Post-activation outputs of every layer for one input; the last entry
    /// is the output logit (before the sigmoid).
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut outs = self.buffers();
        self.forward_into(x, &mut outs);
        outs
    }

    fn buffers(&self) -> Vec<Vec<f64>> {
        self.sizes[1..].iter().map(|&n| vec![0.0; n]).collect()
    }

    fn forward_into(&self, x: &[f64], outs: &mut [Vec<f64>]) {
        let n_layers = self.n_layers();
        let mut o = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[o..o + n_in * n_out];
            let b = &self.params[o + n_in * n_out..o + n_in * n_out + n_out];
            o += n_in * n_out + n_out;
            let (prev, rest) = outs.split_at_mut(l);
            let input = if l == 0 { x } else { &prev[l - 1] };
            let last = l + 1 == n_layers;
            for ((slot, row), bias) in rest[0].iter_mut().zip(w.chunks_exact(n_in)).zip(b) {
                let z = dot(row, input) + bias;
                *slot = if last { z } else { z.max(0.0) };
            }
        }
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.forward(x).last().unwrap()[0]
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean binary cross-entropy over the given rows.
    pub fn loss(&self, data: &Dataset, rows: &[usize]) -> f64 {
        let mut outs = self.buffers();
        rows.iter()
            .map(|&i| {
                self.forward_into(data.row(i), &mut outs);
                bce_with_logit(outs[self.n_layers() - 1][0], data.labels[i])
            })
            .sum::<f64>()
            / rows.len() as f64
    }

    /// Mean loss and its gradient with respect to `params`.
    pub fn loss_and_grad(&self, data: &Dataset, rows: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / rows.len() as f64;
        let offsets: Vec<usize> = (0..self.n_layers()).map(|l| self.offset(l)).collect();
        let widest = self.sizes.iter().copied().max().unwrap_or(1);
        let mut outs = self.buffers();
        let mut delta = Vec::with_capacity(widest);
        let mut back = Vec::with_capacity(widest);
        for &i in rows {
            let x = data.row(i);
            self.forward_into(x, &mut outs);
            let z = outs[self.n_layers() - 1][0];
            let y = data.labels[i];
            loss += bce_with_logit(z, y);
            // dL/dz for the output unit
            delta.clear();
            delta.push((sigmoid(z) - f64::from(y)) * scale);
            for l in (0..self.n_layers()).rev() {
                let n_in = self.sizes[l];
                let input = if l == 0 { x } else { &outs[l - 1] };
                let o = offsets[l];
                let n_out = delta.len();
                let (gw, gb) = grad[o..o + n_out * n_in + n_out].split_at_mut(n_out * n_in);
                for ((row, g), d) in gw.chunks_exact_mut(n_in).zip(gb.iter_mut()).zip(&delta) {
                    for (slot, a) in row.iter_mut().zip(input) {
                        *slot += d * a;
                    }
                    *g += d;
                }
                if l > 0 {
                    let w = &self.params[o..o + n_out * n_in];
                    back.clear();
                    back.resize(n_in, 0.0);
                    for (row, d) in w.chunks_exact(n_in).zip(&delta) {
                        for (slot, wv) in back.iter_mut().zip(row) {
                            *slot += d * wv;
                        }
                    }
                    // rectifier derivative, taken as 0 at the kink
                    for (slot, a) in back.iter_mut().zip(&outs[l - 1]) {
                        if *a <= 0.0 {
                            *slot = 0.0;
                        }
                    }
                    std::mem::swap(&mut delta, &mut back);
                }
            }
        }
        (loss * scale, grad)
    }
}

/// Dot product with four independent partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-[y ln σ(z) + (1-y) ln(1-σ(z))]` written as `softplus(z) - y z`.
fn bce_with_logit(z: f64, y: u8) -> f64 {
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    softplus - f64::from(y) * z
}

fn check_width(model: &MlpModel, width: usize) -> Result<()> {
    if width != model.n_inputs() {
        return Err(Error::WidthMismatch {
            expected: model.n_inputs(),
            found: width,
        });
    }
    Ok(())
}

const TEST_LOSS_EVERY: usize = 10;

/// Minibatch Adam on binary cross-entropy; deterministic given `seed`.
pub fn train_mlp(
    train: &Dataset,
    test: Option<&Dataset>,
    hyper: &Hyper,
    seed: u64,
) -> Result<MlpModel> {
    hyper.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(t) = test {
        if t.n_features != train.n_features {
            return Err(Error::WidthMismatch {
                expected: train.n_features,
                found: t.n_features,
            });
        }
    }
    let mut model = MlpModel::init(train.n_features, hyper, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut m = vec![0.0; model.params.len()];
    let mut v = vec![0.0; model.params.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let test_rows: Vec<usize> = test.map(|t| (0..t.len()).collect()).unwrap_or_default();

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(hyper.batch_size) {
            let (loss, grad) = model.loss_and_grad(train, batch);
            if !loss.is_finite() {
                return Err(Error::DivergedTraining { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            step += 1;
            let bc1 = 1.0 - hyper.beta1.powi(step);
            let bc2 = 1.0 - hyper.beta2.powi(step);
            for (((p, g), m), v) in model.params.iter_mut().zip(&grad).zip(&mut m).zip(&mut v) {
                *m = hyper.beta1 * *m + (1.0 - hyper.beta1) * g;
                *v = hyper.beta2 * *v + (1.0 - hyper.beta2) * g * g;
                *p -= hyper.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + hyper.adam_eps);
            }
        }
        model.trace.train_loss.push(epoch_loss / train.len() as f64);
        if let Some(t) = test {
            if epoch % TEST_LOSS_EVERY == 0 || epoch + 1 == hyper.epochs {
                model
                    .trace
                    .test_loss
                    .push((epoch, model.loss(t, &test_rows)));
            }
        }
    }
    if model.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::DivergedTraining {
            epoch: hyper.epochs,
        });
    }
    Ok(model)
}

/// Post-rectifier activations of hidden layer `layer` (0-based), one row per
/// input row.
pub fn capture_activations(
    model: &MlpModel,
    inputs: &ActivationMatrix,
    layer: usize,
) -> Result<ActivationMatrix> {
    if layer >= model.n_hidden() {
        return Err(Error::LayerOutOfRange {
            layer,
            hidden: model.n_hidden(),
        });
    }
    check_width(model, inputs.cols())?;
    let width = model.sizes[layer + 1];
    let mut data = Vec::with_capacity(inputs.rows() * width);
    let mut outs = model.buffers();
    for r in 0..inputs.rows() {
        model.forward_into(inputs.row(r), &mut outs);
        data.extend_from_slice(&outs[layer]);
    }
    ActivationMatrix::new(inputs.rows(), width, data)
}

/// Fraction of rows whose thresholded output (p >= 0.5 means 1) matches the
/// label.
pub fn eval_accuracy(model: &MlpModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_width(model, data.n_features)?;
    let hits = (0..data.len())
        .filter(|&i| u8::from(model.predict_proba(data.row(i)) >= 0.5) == data.labels[i])
        .count();
    Ok(hits as f64 / data.len() as f64)
}
