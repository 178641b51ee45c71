//! The four classical classifiers over sparse count vectors: linear SVM,
//! logistic regression, random forest, and a one-hidden-layer perceptron.
//! All trainers are deterministic given (data, config, seed).

mod artifact;
mod forest;
mod linear;
mod mlp;

pub use artifact::{ModelArtifact, ModelKind, TrainSettings, ARTIFACT_FORMAT_VERSION};
pub use forest::{train_forest, ForestConfig, ForestModel, MaxFeatures};
pub use linear::{
    hinge_objective, logistic_objective, logistic_objective_grad, train_logreg, train_svm,
    LinearModel, LogRegConfig, LossKind, SvmConfig,
};
pub use mlp::{mlp_loss_grad, train_mlp, MlpConfig, MlpModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::vectorizer::SparseVector;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("training labels contain a single class; need both ironic and non-ironic examples")]
    SingleClass,
    #[error("need at least {min} examples, got {n}")]
    TooFewExamples { n: usize, min: usize },
    #[error("rows and labels differ in length ({rows} vs {labels})")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("feature index {index} out of range for dimension {dim}")]
    DimensionMismatch { index: u32, dim: usize },
    #[error("no training examples")]
    EmptyDataset,
}

/// Validate a (rows, labels, dim) dataset before training.
fn check_dataset(rows: &[SparseVector], labels: &[Label], dim: usize) -> Result<(), LearnError> {
    if rows.len() != labels.len() {
        return Err(LearnError::LengthMismatch {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    if rows.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    check_rows(rows, dim)?;
    let ironic = labels.iter().filter(|l| l.is_ironic()).count();
    if ironic == 0 || ironic == labels.len() {
        return Err(LearnError::SingleClass);
    }
    Ok(())
}

fn check_rows(rows: &[SparseVector], dim: usize) -> Result<(), LearnError> {
    for row in rows {
        if let Some(max) = row.max_index() {
            if max as usize >= dim {
                return Err(LearnError::DimensionMismatch { index: max, dim });
            }
        }
    }
    Ok(())
}

/// A trained classifier of any of the four kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Linear(LinearModel),
    Forest(ForestModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Linear(m) => m.weights.len(),
            Model::Forest(m) => m.dim,
            Model::Mlp(m) => m.dim,
        }
    }

    /// Decision threshold on the score: 0 for margins, 0.5 for
    /// probabilities.
    pub fn threshold(&self) -> f64 {
        match self {
            Model::Linear(m) => m.threshold(),
            Model::Forest(_) | Model::Mlp(_) => 0.5,
        }
    }

    pub fn score_one(&self, row: &SparseVector) -> f64 {
        match self {
            Model::Linear(m) => m.score(row),
            Model::Forest(m) => m.score(row),
            Model::Mlp(m) => m.probability(row),
        }
    }
}

/// Predicted label plus the real-valued score it was thresholded from
/// (margin for hinge models, probability otherwise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

/// Predict every row. `label = 1` iff `score > threshold`; exact ties go
/// to the non-ironic class.
pub fn predict(model: &Model, rows: &[SparseVector]) -> Result<Vec<Prediction>, LearnError> {
    check_rows(rows, model.dim())?;
    let threshold = model.threshold();
    Ok(rows
        .iter()
        .map(|row| {
            let score = model.score_one(row);
            let label = if score > threshold {
                Label::Ironic
            } else {
                Label::NotIronic
            };
            Prediction { label, score }
        })
        .collect())
}

/// Labels only, for callers that do not need scores.
pub fn predict_labels(model: &Model, rows: &[SparseVector]) -> Result<Vec<Label>, LearnError> {
    Ok(predict(model, rows)?.into_iter().map(|p| p.label).collect())
}

/// Fraction of rows whose prediction matches `labels`.
pub fn accuracy(model: &Model, rows: &[SparseVector], labels: &[Label]) -> Result<f64, LearnError> {
    let predictions = predict(model, rows)?;
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p.label == **l)
        .count();
    Ok(hits as f64 / labels.len().max(1) as f64)
}

pub(crate) fn signed(label: Label) -> f64 {
    if label.is_ironic() {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Stable `-[y ln p + (1-y) ln(1-p)]` with `p = sigmoid(z)`.
pub(crate) fn cross_entropy(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.to_vec()).unwrap()
    }

    #[test]
    fn zero_linear_model_predicts_all_negative_by_tie_rule() {
        let model = Model::Linear(LinearModel {
            weights: vec![0.0, 0.0],
            bias: 0.0,
            loss: LossKind::Hinge,
            c: 1.0,
        });
        let rows = vec![row(&[(0, 1.0)]), row(&[(1, 3.0)]), SparseVector::empty()];
        let predictions = predict(&model, &rows).unwrap();
        assert!(predictions.iter().all(|p| p.label == Label::NotIronic));
        assert!(predictions.iter().all(|p| p.score == 0.0));
    }

    #[test]
    fn predict_rejects_dimension_mismatch() {
        let model = Model::Linear(LinearModel {
            weights: vec![0.0],
            bias: 0.0,
            loss: LossKind::Hinge,
            c: 1.0,
        });
        let err = predict(&model, &[row(&[(4, 1.0)])]).unwrap_err();
        assert!(matches!(
            err,
            LearnError::DimensionMismatch { index: 4, dim: 1 }
        ));
    }

    #[test]
    fn sigmoid_is_stable_and_symmetric() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
        let z = 1.37;
        assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_matches_naive_formula_in_safe_range() {
        for &(z, y) in &[(0.3, 1.0), (-2.0, 0.0), (1.5, 0.0), (-0.7, 1.0)] {
            let p = sigmoid(z);
            let naive = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
            assert!((cross_entropy(z, y) - naive).abs() < 1e-12);
        }
    }
}
