//! Linear models: L2-regularized hinge (SVM) and logistic loss, trained
//! by seeded per-example (sub)gradient descent with the sparse
//! scale-vector trick.
//!
//! Objectives, with `C` the inverse regularization strength and the bias
//! unregularized:
//!
//! - hinge:    `J = 0.5 ||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))`
//! - logistic: `J = ||w||^2 / (2C) + sum_i ce(w.x_i + b, y_i)`

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dataset, cross_entropy, sigmoid, signed, LearnError};
use crate::corpus::Label;
use crate::vectorizer::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    Hinge,
    Logistic,
}

/// Weights + bias with the loss they were trained under. The decision is
/// `w.x + b > 0`, reported as a margin (hinge) or probability (logistic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub loss: LossKind,
    pub c: f64,
}

impl LinearModel {
    pub fn margin(&self, row: &SparseVector) -> f64 {
        row.dot(&self.weights) + self.bias
    }

    pub fn score(&self, row: &SparseVector) -> f64 {
        match self.loss {
            LossKind::Hinge => self.margin(row),
            LossKind::Logistic => sigmoid(self.margin(row)),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self.loss {
            LossKind::Hinge => 0.0,
            LossKind::Logistic => 0.5,
        }
    }
}

/// Linear-kernel SVM settings. With `learning_rate = None` the step size
/// follows the 1/(lambda t) schedule (offset by n to temper the first
/// steps); a fixed rate is mainly for step-size-sensitive tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub tolerance: f64,
    pub max_epochs: usize,
    pub learning_rate: Option<f64>,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            tolerance: 1e-4,
            max_epochs: 1000,
            learning_rate: None,
            seed: 42,
        }
    }
}

/// Logistic-regression settings. The epoch cap defaults to 5 full passes
/// over the data; `converge` lifts the cap and runs to tolerance instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub c: f64,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub converge: bool,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            c: 1.0,
            max_epochs: 5,
            learning_rate: 0.1,
            converge: false,
            tolerance: 1e-4,
            seed: 42,
        }
    }
}

const CONVERGE_EPOCH_CAP: usize = 1000;

/// `w` kept as `scale * direction` so the per-example L2 decay is O(1)
/// and only touched coordinates pay for updates.
struct ScaledVector {
    direction: Vec<f64>,
    scale: f64,
}

impl ScaledVector {
    fn zeros(dim: usize) -> Self {
        ScaledVector {
            direction: vec![0.0; dim],
            scale: 1.0,
        }
    }

    fn dot(&self, row: &SparseVector) -> f64 {
        self.scale * row.dot(&self.direction)
    }

    fn decay(&mut self, factor: f64) {
        if factor <= 0.0 {
            // a step of eta*lambda >= 1 collapses w to zero exactly
            self.direction.iter_mut().for_each(|v| *v = 0.0);
            self.scale = 1.0;
            return;
        }
        self.scale *= factor;
        if self.scale < 1e-9 {
            self.materialize();
        }
    }

    fn add_scaled(&mut self, row: &SparseVector, coefficient: f64) {
        let inner = coefficient / self.scale;
        for (index, value) in row.entries() {
            self.direction[*index as usize] += inner * value;
        }
    }

    fn materialize(&mut self) {
        for v in &mut self.direction {
            *v *= self.scale;
        }
        self.scale = 1.0;
    }

    fn into_dense(mut self) -> Vec<f64> {
        self.materialize();
        self.direction
    }
}

/// Train the linear-kernel SVM by seeded sub-gradient descent on the
/// L2-regularized hinge loss, stopping at the relative-objective
/// tolerance or the epoch cap.
pub fn train_svm(
    rows: &[SparseVector],
    labels: &[Label],
    dim: usize,
    config: &SvmConfig,
) -> Result<LinearModel, LearnError> {
    check_dataset(rows, labels, dim)?;
    let n = rows.len();
    let lambda = 1.0 / (config.c * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = ScaledVector::zeros(dim);
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut step = 0usize;
    let mut prev_objective = f64::INFINITY;

    for _ in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            step += 1;
            let eta = config
                .learning_rate
                .unwrap_or_else(|| 1.0 / (lambda * (step + n) as f64));
            let y = signed(labels[i]);
            let margin = y * (w.dot(&rows[i]) + bias);
            w.decay(1.0 - eta * lambda);
            if margin < 1.0 {
                w.add_scaled(&rows[i], eta * y);
                bias += eta * y;
            }
        }
        w.materialize();
        let objective = hinge_objective(&w.direction, bias, rows, labels, config.c);
        let converged = prev_objective.is_finite()
            && (prev_objective - objective).abs()
                <= config.tolerance * prev_objective.abs().max(1.0);
        prev_objective = objective;
        if converged {
            break;
        }
    }

    Ok(LinearModel {
        weights: w.into_dense(),
        bias,
        loss: LossKind::Hinge,
        c: config.c,
    })
}

/// Train logistic regression by seeded per-example gradient descent,
/// capped at `max_epochs` passes (default 5) unless `converge` is set.
pub fn train_logreg(
    rows: &[SparseVector],
    labels: &[Label],
    dim: usize,
    config: &LogRegConfig,
) -> Result<LinearModel, LearnError> {
    check_dataset(rows, labels, dim)?;
    let n = rows.len();
    let lambda = 1.0 / (config.c * n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = ScaledVector::zeros(dim);
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let epochs = if config.converge {
        CONVERGE_EPOCH_CAP
    } else {
        config.max_epochs
    };
    let mut prev_objective = f64::INFINITY;

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = config.learning_rate;
            let y = f64::from(labels[i].as_u8());
            let p = sigmoid(w.dot(&rows[i]) + bias);
            let g = p - y;
            w.decay(1.0 - eta * lambda);
            w.add_scaled(&rows[i], -eta * g);
            bias -= eta * g;
        }
        if config.converge {
            w.materialize();
            let objective = logistic_objective(&w.direction, bias, rows, labels, config.c);
            let converged = prev_objective.is_finite()
                && (prev_objective - objective).abs()
                    <= config.tolerance * prev_objective.abs().max(1.0);
            prev_objective = objective;
            if converged {
                break;
            }
        }
    }

    Ok(LinearModel {
        weights: w.into_dense(),
        bias,
        loss: LossKind::Logistic,
        c: config.c,
    })
}

/// `0.5 ||w||^2 + C sum_i max(0, 1 - y_i (w.x_i + b))`.
pub fn hinge_objective(
    weights: &[f64],
    bias: f64,
    rows: &[SparseVector],
    labels: &[Label],
    c: f64,
) -> f64 {
    let reg: f64 = 0.5 * weights.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = rows
        .iter()
        .zip(labels)
        .map(|(row, label)| {
            let margin = signed(*label) * (row.dot(weights) + bias);
            (1.0 - margin).max(0.0)
        })
        .sum();
    reg + c * hinge
}

/// `sum_i ce_i + ||w||^2 / (2C)`.
pub fn logistic_objective(
    weights: &[f64],
    bias: f64,
    rows: &[SparseVector],
    labels: &[Label],
    c: f64,
) -> f64 {
    logistic_objective_grad(weights, bias, rows, labels, c).0
}

/// Full-batch logistic objective with its analytic gradient
/// `(loss, d/dw, d/db)`; checked against central finite differences in
/// the test suite.
pub fn logistic_objective_grad(
    weights: &[f64],
    bias: f64,
    rows: &[SparseVector],
    labels: &[Label],
    c: f64,
) -> (f64, Vec<f64>, f64) {
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; weights.len()];
    let mut grad_b = 0.0;
    for (row, label) in rows.iter().zip(labels) {
        let y = f64::from(label.as_u8());
        let z = row.dot(weights) + bias;
        loss += cross_entropy(z, y);
        let g = sigmoid(z) - y;
        for (index, value) in row.entries() {
            grad_w[*index as usize] += g * value;
        }
        grad_b += g;
    }
    loss += weights.iter().map(|w| w * w).sum::<f64>() / (2.0 * c);
    for (gw, w) in grad_w.iter_mut().zip(weights) {
        *gw += w / c;
    }
    (loss, grad_w, grad_b)
}
