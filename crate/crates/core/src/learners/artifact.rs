//! Versioned, self-describing model container: trained parameters plus
//! the vocabulary, feature spec, training config, and seed needed to
//! reproduce its predictions. JSON-encoded; byte-identical across runs
//! with the same seed, and float-exact on round-trip.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ForestConfig, LogRegConfig, MlpConfig, Model, SvmConfig};
use crate::features::FeatureSpec;
use crate::vectorizer::Vocabulary;

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svm,
    Logreg,
    Rf,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Svm,
        ModelKind::Logreg,
        ModelKind::Rf,
        ModelKind::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Svm => "svm",
            ModelKind::Logreg => "logreg",
            ModelKind::Rf => "rf",
            ModelKind::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The per-model hyper-parameter block that produced an artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainSettings {
    Svm(SvmConfig),
    Logreg(LogRegConfig),
    Rf(ForestConfig),
    Mlp(MlpConfig),
}

impl TrainSettings {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainSettings::Svm(_) => ModelKind::Svm,
            TrainSettings::Logreg(_) => ModelKind::Logreg,
            TrainSettings::Rf(_) => ModelKind::Rf,
            TrainSettings::Mlp(_) => ModelKind::Mlp,
        }
    }
}

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed model artifact: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported artifact format version {found} (supported: {ARTIFACT_FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub toolkit_version: String,
    pub language: String,
    pub seed: u64,
    pub feature_spec: FeatureSpec,
    pub binary_counts: bool,
    /// Negation cues in effect at training time, so evaluation extracts
    /// the deprelneg namespace identically.
    pub negation_cues: Vec<String>,
    pub settings: TrainSettings,
    /// Accuracy on the training set at save time; reloading and
    /// re-predicting must reproduce it.
    pub train_accuracy: f64,
    pub vocabulary: Vocabulary,
    pub model: Model,
}

impl ModelArtifact {
    pub fn kind(&self) -> ModelKind {
        self.settings.kind()
    }

    /// Deterministic pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifact serialization cannot fail") + "\n"
    }

    pub fn from_json(text: &str) -> Result<ModelArtifact, ArtifactError> {
        let artifact: ModelArtifact = serde_json::from_str(text)?;
        if artifact.format_version != ARTIFACT_FORMAT_VERSION {
            return Err(ArtifactError::UnsupportedVersion {
                found: artifact.format_version,
            });
        }
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        fs::write(path, self.to_json()).map_err(|source| ArtifactError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<ModelArtifact, ArtifactError> {
        let text = fs::read_to_string(path).map_err(|source| ArtifactError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ModelArtifact::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use crate::features::{FeatureBag, Namespace};
    use crate::learners::{accuracy, train_svm, predict_labels};
    use crate::vectorizer::{vectorize, SparseVector};

    fn toy_artifact() -> (ModelArtifact, Vec<SparseVector>, Vec<Label>) {
        let mut bag_a = FeatureBag::new();
        bag_a.add(Namespace::Ngrams, "great".to_string());
        let mut bag_b = FeatureBag::new();
        bag_b.add(Namespace::Ngrams, "waiting".to_string());
        let spec = FeatureSpec::single(Namespace::Ngrams);
        let vocab = Vocabulary::build([&bag_a, &bag_b], &spec).unwrap();
        let rows = vec![
            vectorize(&bag_a, &vocab, &spec, false).unwrap(),
            vectorize(&bag_b, &vocab, &spec, false).unwrap(),
        ];
        let labels = vec![Label::Ironic, Label::NotIronic];
        let config = SvmConfig::default();
        let model = train_svm(&rows, &labels, vocab.len(), &config).unwrap();
        let model = Model::Linear(model);
        let train_accuracy = accuracy(&model, &rows, &labels).unwrap();
        let artifact = ModelArtifact {
            format_version: ARTIFACT_FORMAT_VERSION,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            language: "en".to_string(),
            seed: config.seed,
            feature_spec: spec,
            binary_counts: false,
            negation_cues: Vec::new(),
            settings: TrainSettings::Svm(config),
            train_accuracy,
            vocabulary: vocab,
            model,
        };
        (artifact, rows, labels)
    }

    #[test]
    fn json_roundtrip_predicts_identically() {
        let (artifact, rows, _) = toy_artifact();
        let reloaded = ModelArtifact::from_json(&artifact.to_json()).unwrap();
        assert_eq!(reloaded, artifact);
        assert_eq!(
            predict_labels(&reloaded.model, &rows).unwrap(),
            predict_labels(&artifact.model, &rows).unwrap()
        );
    }

    #[test]
    fn reload_reproduces_training_accuracy() {
        let (artifact, rows, labels) = toy_artifact();
        let reloaded = ModelArtifact::from_json(&artifact.to_json()).unwrap();
        let again = accuracy(&reloaded.model, &rows, &labels).unwrap();
        assert_eq!(again, artifact.train_accuracy);
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let (a, _, _) = toy_artifact();
        let (b, _, _) = toy_artifact();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn version_gate() {
        let (mut artifact, _, _) = toy_artifact();
        artifact.format_version = 99;
        let err = ModelArtifact::from_json(&artifact.to_json()).unwrap_err();
        assert!(matches!(
            err,
            ArtifactError::UnsupportedVersion { found: 99 }
        ));
    }

    #[test]
    fn kind_names() {
        assert_eq!(ModelKind::parse("rf"), Some(ModelKind::Rf));
        assert_eq!(ModelKind::parse("bert"), None);
        let (artifact, _, _) = toy_artifact();
        assert_eq!(artifact.kind(), ModelKind::Svm);
    }
}
