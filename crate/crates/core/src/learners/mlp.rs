//! One-hidden-layer perceptron: logistic hidden activation, sigmoid
//! output with cross-entropy loss, minibatch gradient descent (batch 5,
//! learning rate 0.01), and early stopping on a seeded 10% validation
//! split with patience 5.
//!
//! The reference setting pairs these minibatch hyper-parameters with a
//! quasi-Newton solver that would ignore them; this trainer honors the
//! stated batch size and learning rate instead.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dataset, cross_entropy, sigmoid, LearnError};
use crate::corpus::Label;
use crate::vectorizer::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Consecutive non-improving epochs tolerated before stopping.
    pub patience: usize,
    /// Fraction of the data carved out as the validation split.
    pub val_fraction: f64,
    /// Minimum validation-loss improvement that resets patience.
    pub tolerance: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: 30,
            batch: 5,
            learning_rate: 0.01,
            max_epochs: 200,
            patience: 5,
            val_fraction: 0.1,
            tolerance: 1e-4,
            l2: 0.0,
            seed: 42,
        }
    }
}

/// Weights in input-major layout: `w1[j * hidden + h]` connects input j
/// to hidden unit h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub dim: usize,
    pub hidden: usize,
}

impl MlpModel {
    fn hidden_activations(&self, row: &SparseVector) -> Vec<f64> {
        let mut z = self.b1.clone();
        for (index, value) in row.entries() {
            let base = *index as usize * self.hidden;
            for h in 0..self.hidden {
                z[h] += self.w1[base + h] * value;
            }
        }
        for zh in &mut z {
            *zh = sigmoid(*zh);
        }
        z
    }

    fn output_preactivation(&self, row: &SparseVector) -> f64 {
        let h = self.hidden_activations(row);
        self.b2 + h.iter().zip(&self.w2).map(|(a, w)| a * w).sum::<f64>()
    }

    /// Forward pass to the ironic-class probability, in (0, 1).
    pub fn probability(&self, row: &SparseVector) -> f64 {
        sigmoid(self.output_preactivation(row))
    }
}

fn init_model(dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> MlpModel {
    // seeded uniform init in [-0.05, 0.05]; biases start at zero
    let mut uniform = || rng.gen_range(-0.05..=0.05);
    MlpModel {
        w1: (0..dim * hidden).map(|_| uniform()).collect(),
        b1: vec![0.0; hidden],
        w2: (0..hidden).map(|_| uniform()).collect(),
        b2: 0.0,
        dim,
        hidden,
    }
}

struct Gradients {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl Gradients {
    fn zeros(dim: usize, hidden: usize) -> Self {
        Gradients {
            w1: vec![0.0; dim * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }
}

/// Cross-entropy of one example accumulated into `grads` (unregularized).
fn backprop(model: &MlpModel, row: &SparseVector, y: f64, grads: &mut Gradients) -> f64 {
    let hidden = model.hidden_activations(row);
    let z_out = model.b2
        + hidden
            .iter()
            .zip(&model.w2)
            .map(|(a, w)| a * w)
            .sum::<f64>();
    let loss = cross_entropy(z_out, y);
    let delta_out = sigmoid(z_out) - y;

    grads.b2 += delta_out;
    for h in 0..model.hidden {
        grads.w2[h] += delta_out * hidden[h];
    }
    // delta for hidden unit h: delta_out * w2[h] * sigmoid'(z1[h])
    let delta_hidden: Vec<f64> = (0..model.hidden)
        .map(|h| delta_out * model.w2[h] * hidden[h] * (1.0 - hidden[h]))
        .collect();
    for h in 0..model.hidden {
        grads.b1[h] += delta_hidden[h];
    }
    for (index, value) in row.entries() {
        let base = *index as usize * model.hidden;
        for h in 0..model.hidden {
            grads.w1[base + h] += delta_hidden[h] * value;
        }
    }
    loss
}

/// Full-batch mean cross-entropy plus `l2/2 (||w1||^2 + ||w2||^2)`, with
/// its analytic gradient. The gradient layout mirrors the model fields.
pub fn mlp_loss_grad(
    model: &MlpModel,
    rows: &[SparseVector],
    labels: &[Label],
    l2: f64,
) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    let n = rows.len() as f64;
    let mut grads = Gradients::zeros(model.dim, model.hidden);
    let mut loss = 0.0;
    for (row, label) in rows.iter().zip(labels) {
        loss += backprop(model, row, f64::from(label.as_u8()), &mut grads);
    }
    loss /= n;
    for g in grads.w1.iter_mut().chain(grads.w2.iter_mut()) {
        *g /= n;
    }
    for g in grads.b1.iter_mut() {
        *g /= n;
    }
    grads.b2 /= n;

    if l2 > 0.0 {
        let norm: f64 = model.w1.iter().chain(model.w2.iter()).map(|w| w * w).sum();
        loss += 0.5 * l2 * norm;
        for (g, w) in grads.w1.iter_mut().zip(&model.w1) {
            *g += l2 * w;
        }
        for (g, w) in grads.w2.iter_mut().zip(&model.w2) {
            *g += l2 * w;
        }
    }
    (loss, grads.w1, grads.b1, grads.w2, grads.b2)
}

fn mean_validation_loss(model: &MlpModel, rows: &[SparseVector], labels: &[Label]) -> f64 {
    let total: f64 = rows
        .iter()
        .zip(labels)
        .map(|(row, label)| {
            cross_entropy(model.output_preactivation(row), f64::from(label.as_u8()))
        })
        .sum();
    total / rows.len() as f64
}

/// Train the perceptron. Needs at least 10 examples so the seeded 10%
/// validation split is non-empty; the best-validation-loss parameters are
/// returned.
pub fn train_mlp(
    rows: &[SparseVector],
    labels: &[Label],
    dim: usize,
    config: &MlpConfig,
) -> Result<MlpModel, LearnError> {
    check_dataset(rows, labels, dim)?;
    if rows.len() < 10 {
        return Err(LearnError::TooFewExamples {
            n: rows.len(),
            min: 10,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut indices: Vec<usize> = (0..rows.len()).collect();
    indices.shuffle(&mut rng);
    let val_size = ((rows.len() as f64 * config.val_fraction).ceil() as usize)
        .clamp(1, rows.len() - 1);
    let (val_idx, train_idx) = indices.split_at(val_size);
    let val_rows: Vec<SparseVector> = val_idx.iter().map(|&i| rows[i].clone()).collect();
    let val_labels: Vec<Label> = val_idx.iter().map(|&i| labels[i]).collect();
    let mut train_order: Vec<usize> = train_idx.to_vec();

    let mut model = init_model(dim, config.hidden, &mut rng);
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut stale_epochs = 0usize;
    let batch_size = config.batch.max(1);

    for _ in 0..config.max_epochs {
        train_order.shuffle(&mut rng);
        for batch in train_order.chunks(batch_size) {
            let mut grads = Gradients::zeros(dim, config.hidden);
            for &i in batch {
                backprop(&model, &rows[i], f64::from(labels[i].as_u8()), &mut grads);
            }
            let step = config.learning_rate / batch.len() as f64;
            for (w, g) in model.w1.iter_mut().zip(&grads.w1) {
                *w -= step * g + config.learning_rate * config.l2 * *w;
            }
            for (w, g) in model.w2.iter_mut().zip(&grads.w2) {
                *w -= step * g + config.learning_rate * config.l2 * *w;
            }
            for (b, g) in model.b1.iter_mut().zip(&grads.b1) {
                *b -= step * g;
            }
            model.b2 -= step * grads.b2;
        }

        let val_loss = mean_validation_loss(&model, &val_rows, &val_labels);
        if val_loss < best_loss - config.tolerance {
            best_loss = val_loss;
            best = model.clone();
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }
    Ok(best)
}
