//! Multilayer perceptron: ReLU hidden layers, softmax output, cross-entropy
//! loss, mini-batch SGD.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LabeledSet, TrainedModel};
use crate::error::{Error, Result};

/// Training settings.
#[derive(Debug, Clone)]
pub struct MlpParams {
    /// Hidden layer widths, input to output order.
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![128],
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

/// A feed-forward network. Inputs are standardized with the training mean
/// and deviation before the first layer.
#[derive(Debug, Clone)]
pub struct MlpClassifier {
    /// Widths including input and output: `[d, h1, ..., C]`.
    pub(crate) layer_sizes: Vec<usize>,
    /// Per layer, row-major `out x in`.
    pub(crate) weights: Vec<Vec<f64>>,
    pub(crate) biases: Vec<Vec<f64>>,
    pub(crate) mean: Vec<f64>,
    pub(crate) std: Vec<f64>,
}

impl MlpClassifier {
    /// Fresh network with Glorot-uniform weights and zero biases, identity
    /// input standardization. `seed` fully determines the initialization.
    pub fn init(input_dim: usize, hidden: &[usize], class_count: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Config("input dimension must be positive".into()));
        }
        if class_count < 2 {
            return Err(Error::Config("need at least two classes".into()));
        }
        if hidden.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden layers must be nonempty".into()));
        }
        let mut layer_sizes = vec![input_dim];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(class_count);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Ok(MlpClassifier {
            layer_sizes,
            weights,
            biases,
            mean: vec![0.0; input_dim],
            std: vec![1.0; input_dim],
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn class_count(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    fn layer_count(&self) -> usize {
        self.weights.len()
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Activations of every layer for a standardized input; the last entry
    /// holds raw logits.
    fn forward(&self, x_std: Vec<f64>) -> Vec<Vec<f64>> {
        let mut activations = Vec::with_capacity(self.layer_count() + 1);
        activations.push(x_std);
        for l in 0..self.layer_count() {
            let fan_in = self.layer_sizes[l];
            let fan_out = self.layer_sizes[l + 1];
            let input = activations.last().unwrap();
            let mut out = Vec::with_capacity(fan_out);
            for r in 0..fan_out {
                let row = &self.weights[l][r * fan_in..(r + 1) * fan_in];
                let z: f64 =
                    row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>() + self.biases[l][r];
                out.push(if l + 1 < self.layer_count() { z.max(0.0) } else { z });
            }
            activations.push(out);
        }
        activations
    }

    /// Class probabilities via a max-shifted softmax; sums to 1.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let activations = self.forward(self.standardize(x));
        softmax(activations.last().unwrap())
    }

    pub fn predict_one(&self, x: &[f64]) -> usize {
        let activations = self.forward(self.standardize(x));
        let logits = activations.last().unwrap();
        let mut best = 0;
        for (i, &v) in logits.iter().enumerate().skip(1) {
            if v > logits[best] {
                best = i;
            }
        }
        best
    }

    /// Cross-entropy loss of one example.
    pub fn loss(&self, x: &[f64], label: usize) -> f64 {
        let activations = self.forward(self.standardize(x));
        let probs = softmax(activations.last().unwrap());
        -probs[label].max(1e-300).ln()
    }

    /// Gradient of [`MlpClassifier::loss`] with respect to every parameter,
    /// flattened in [`MlpClassifier::flat_params`] order.
    pub fn loss_gradient(&self, x: &[f64], label: usize) -> Vec<f64> {
        let mut grads = GradientBuffers::zeroed(self);
        let activations = self.forward(self.standardize(x));
        self.accumulate_gradient(&activations, label, &mut grads);
        grads.flatten()
    }

    /// Backpropagate one example into `grads`; `activations` comes from
    /// [`MlpClassifier::forward`]. Returns the example's loss.
    fn accumulate_gradient(
        &self,
        activations: &[Vec<f64>],
        label: usize,
        grads: &mut GradientBuffers,
    ) -> f64 {
        let probs = softmax(activations.last().unwrap());
        let loss = -probs[label].max(1e-300).ln();

        // delta starts as dL/dlogits for softmax + cross-entropy.
        let mut delta = probs;
        delta[label] -= 1.0;

        for l in (0..self.layer_count()).rev() {
            let fan_in = self.layer_sizes[l];
            let input = &activations[l];
            for (r, &d) in delta.iter().enumerate() {
                let w_row = &mut grads.weights[l][r * fan_in..(r + 1) * fan_in];
                for (g, a) in w_row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grads.biases[l][r] += d;
            }
            if l == 0 {
                break;
            }
            // delta for the previous layer: W^T delta, gated by ReLU.
            let mut prev = vec![0.0; fan_in];
            for (r, &d) in delta.iter().enumerate() {
                let row = &self.weights[l][r * fan_in..(r + 1) * fan_in];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += w * d;
                }
            }
            for (p, &a) in prev.iter_mut().zip(&activations[l]) {
                if a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
        loss
    }

    /// All parameters as one vector: per layer, weights row-major, then
    /// biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in 0..self.layer_count() {
            out.extend_from_slice(&self.weights[l]);
            out.extend_from_slice(&self.biases[l]);
        }
        out
    }

    /// Overwrite all parameters from [`MlpClassifier::flat_params`] layout.
    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<()> {
        let expected: usize = (0..self.layer_count())
            .map(|l| self.weights[l].len() + self.biases[l].len())
            .sum();
        if params.len() != expected {
            return Err(Error::Mismatch(format!(
                "expected {expected} parameters, got {}",
                params.len()
            )));
        }
        let mut at = 0;
        for l in 0..self.layer_count() {
            let w = self.weights[l].len();
            self.weights[l].copy_from_slice(&params[at..at + w]);
            at += w;
            let b = self.biases[l].len();
            self.biases[l].copy_from_slice(&params[at..at + b]);
            at += b;
        }
        Ok(())
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

struct GradientBuffers {
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl GradientBuffers {
    fn zeroed(net: &MlpClassifier) -> Self {
        GradientBuffers {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        for w in &mut self.weights {
            w.fill(0.0);
        }
        for b in &mut self.biases {
            b.fill(0.0);
        }
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

/// Train an MLP with mini-batch SGD. Deterministic in `params.seed`: one
/// stream initializes the weights and shuffles every epoch.
pub fn train_mlp(data: &LabeledSet, params: &MlpParams) -> Result<TrainedModel> {
    if params.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if !(params.learning_rate.is_finite() && params.learning_rate > 0.0) {
        return Err(Error::Config("learning rate must be positive".into()));
    }
    if data.class_count() < 2 {
        return Err(Error::DegenerateData(
            "MLP needs at least two classes".into(),
        ));
    }

    let n = data.len();
    let dim = data.feature_dim();
    let nf = n as f64;
    let mut mean = vec![0.0; dim];
    for row in data.features() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / nf;
        }
    }
    let mut std = vec![0.0; dim];
    for row in data.features() {
        for ((s, v), m) in std.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m) / nf;
        }
    }
    for s in std.iter_mut() {
        *s = s.sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }

    // One stream drives everything: its first draw seeds the weights, the
    // rest shuffles epochs.
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let init_seed: u64 = rng.random();
    let mut net = MlpClassifier::init(dim, &params.hidden, data.class_count(), init_seed)?;
    net.mean = mean;
    net.std = std;

    let standardized: Vec<Vec<f64>> = data
        .features()
        .iter()
        .map(|row| net.standardize(row))
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    let mut grads = GradientBuffers::zeroed(&net);
    for _epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            grads.clear();
            let mut batch_loss = 0.0;
            for &i in batch {
                let activations = net.forward(standardized[i].clone());
                batch_loss += net.accumulate_gradient(&activations, data.labels()[i], &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(Error::DegenerateData(
                    "MLP training diverged to a non-finite loss".into(),
                ));
            }
            let scale = params.learning_rate / batch.len() as f64;
            for l in 0..net.weights.len() {
                for (w, g) in net.weights[l].iter_mut().zip(&grads.weights[l]) {
                    *w -= scale * g;
                }
                for (b, g) in net.biases[l].iter_mut().zip(&grads.biases[l]) {
                    *b -= scale * g;
                }
            }
        }
    }
    Ok(TrainedModel::Mlp(net))
}
