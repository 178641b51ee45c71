//! Labeled-corpus ingestion: tweet preprocessing, irony labels, and
//! train/test split bookkeeping.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::conllu::{self, ConlluError, Sentence};

/// Binary irony label; ironic is the positive class (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NotIronic,
    Ironic,
}

impl Label {
    pub fn from_int(value: i64) -> Option<Label> {
        match value {
            0 => Some(Label::NotIronic),
            1 => Some(Label::Ironic),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Label::NotIronic => 0,
            Label::Ironic => 1,
        }
    }

    pub fn is_ironic(self) -> bool {
        self == Label::Ironic
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Test => write!(f, "test"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub sentence: Sentence,
    pub label: Label,
    pub split: Split,
    /// Language tag, e.g. "en"/"es"/"fr"/"it".
    pub language: String,
}

/// Sentences paired with binary irony labels and split tags.
#[derive(Debug, Clone, Default)]
pub struct LabeledCorpus {
    pub items: Vec<CorpusItem>,
}

impl LabeledCorpus {
    pub fn train(&self) -> impl Iterator<Item = &CorpusItem> {
        self.items.iter().filter(|i| i.split == Split::Train)
    }

    pub fn test(&self) -> impl Iterator<Item = &CorpusItem> {
        self.items.iter().filter(|i| i.split == Split::Test)
    }

    pub fn counts(&self) -> CorpusCounts {
        let mut counts = CorpusCounts::default();
        for item in &self.items {
            match (item.split, item.label) {
                (Split::Train, Label::Ironic) => counts.train_ironic += 1,
                (Split::Train, Label::NotIronic) => counts.train_not += 1,
                (Split::Test, Label::Ironic) => counts.test_ironic += 1,
                (Split::Test, Label::NotIronic) => counts.test_not += 1,
            }
        }
        counts
    }
}

/// Per-class, per-split item counts (the corpus manifest report).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusCounts {
    pub train_ironic: usize,
    pub train_not: usize,
    pub test_ironic: usize,
    pub test_not: usize,
}

impl CorpusCounts {
    pub fn train_total(&self) -> usize {
        self.train_ironic + self.train_not
    }

    pub fn test_total(&self) -> usize {
        self.test_ironic + self.test_not
    }

    pub fn get(&self, split: Split, label: Label) -> usize {
        match (split, label) {
            (Split::Train, Label::Ironic) => self.train_ironic,
            (Split::Train, Label::NotIronic) => self.train_not,
            (Split::Test, Label::Ironic) => self.test_ironic,
            (Split::Test, Label::NotIronic) => self.test_not,
        }
    }

    pub fn to_tsv(&self) -> String {
        format!(
            "split\tclass\tcount\n\
             train\tironic\t{}\ntrain\tnot\t{}\ntrain\ttotal\t{}\n\
             test\tironic\t{}\ntest\tnot\t{}\ntest\ttotal\t{}\n",
            self.train_ironic,
            self.train_not,
            self.train_total(),
            self.test_ironic,
            self.test_not,
            self.test_total(),
        )
    }
}

impl fmt::Display for CorpusCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "train: {} ironic / {} not ({} total); test: {} ironic / {} not ({} total)",
            self.train_ironic,
            self.train_not,
            self.train_total(),
            self.test_ironic,
            self.test_not,
            self.test_total(),
        )
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ConlluError),
    #[error("sentence {sent_id} has no irony label")]
    MissingLabel { sent_id: String },
    #[error("sentence {sent_id}: label {value:?} is not in {{0,1}}")]
    BadLabel { sent_id: String, value: String },
    #[error("duplicate sent_id {sent_id}")]
    DuplicateSentId { sent_id: String },
    #[error("sentence #{index} in {path} has no sent_id metadata")]
    MissingSentId { path: PathBuf, index: usize },
    #[error("malformed label line {line}: {text:?} (expected sent_id<TAB>label)")]
    BadSidecarLine { line: usize, text: String },
    #[error("manifest mismatch for {split}/{label}: expected {expected}, found {found}")]
    ManifestMismatch {
        split: Split,
        label: Label,
        expected: usize,
        found: usize,
    },
    #[error("malformed manifest line {line}: {text:?} (expected split<TAB>class<TAB>count)")]
    BadManifestLine { line: usize, text: String },
}

/// Strip whitespace-delimited URLs (`http://`, `https://`, `www.` prefixes,
/// case-insensitive), lowercase, and collapse whitespace. Idempotent.
pub fn preprocess_text(raw: &str) -> String {
    let kept: Vec<String> = raw
        .split_whitespace()
        .filter_map(|token| {
            let lower = token.to_lowercase();
            if lower.starts_with("http://")
                || lower.starts_with("https://")
                || lower.starts_with("www.")
            {
                None
            } else {
                Some(lower)
            }
        })
        .collect();
    kept.join(" ")
}

/// Where irony labels come from.
#[derive(Debug, Clone)]
pub enum LabelSource {
    /// `# irony = 0|1` metadata on each sentence.
    Embedded,
    /// Sidecar map `sent_id -> label` (from a `sent_id<TAB>label` TSV).
    Sidecar(HashMap<String, Label>),
}

/// Parse a `sent_id<TAB>label` sidecar file. `#` lines are comments.
pub fn parse_label_sidecar(text: &str) -> Result<HashMap<String, Label>, CorpusError> {
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (sent_id, value) = line.split_once('\t').ok_or(CorpusError::BadSidecarLine {
            line: i + 1,
            text: line.to_string(),
        })?;
        let label = parse_label(sent_id, value.trim())?;
        if map.insert(sent_id.to_string(), label).is_some() {
            return Err(CorpusError::DuplicateSentId {
                sent_id: sent_id.to_string(),
            });
        }
    }
    Ok(map)
}

fn parse_label(sent_id: &str, value: &str) -> Result<Label, CorpusError> {
    value
        .parse::<i64>()
        .ok()
        .and_then(Label::from_int)
        .ok_or_else(|| CorpusError::BadLabel {
            sent_id: sent_id.to_string(),
            value: value.to_string(),
        })
}

/// Inputs for [`load_corpus`].
#[derive(Debug, Clone)]
pub struct CorpusSpec {
    pub train_paths: Vec<PathBuf>,
    pub test_paths: Vec<PathBuf>,
    /// Path of a label sidecar TSV; `None` means labels are embedded
    /// as `# irony` metadata.
    pub labels_path: Option<PathBuf>,
    pub language: String,
    /// Drop invalid sentences with a warning instead of aborting.
    pub lenient: bool,
}

/// Result of [`load_corpus`]: the corpus plus any sentences dropped in
/// lenient mode.
#[derive(Debug)]
pub struct LoadOutcome {
    pub corpus: LabeledCorpus,
    pub dropped: Vec<ConlluError>,
}

/// Read CoNLL-U files into a [`LabeledCorpus`], joining labels from
/// metadata or the sidecar and tagging each sentence with its split.
pub fn load_corpus(spec: &CorpusSpec) -> Result<LoadOutcome, CorpusError> {
    let label_source = match &spec.labels_path {
        Some(path) => LabelSource::Sidecar(parse_label_sidecar(&read(path)?)?),
        None => LabelSource::Embedded,
    };

    let mut corpus = LabeledCorpus::default();
    let mut dropped = Vec::new();
    let mut seen_ids = HashSet::new();
    for (split, paths) in [
        (Split::Train, &spec.train_paths),
        (Split::Test, &spec.test_paths),
    ] {
        for path in paths {
            let text = read(path)?;
            let sentences = if spec.lenient {
                let (sentences, errors) = conllu::parse_conllu_lenient(&text);
                dropped.extend(errors);
                sentences
            } else {
                conllu::parse_conllu(&text)?
            };
            attach_labels(
                &mut corpus,
                sentences,
                &label_source,
                split,
                &spec.language,
                path,
                &mut seen_ids,
            )?;
        }
    }
    Ok(LoadOutcome { corpus, dropped })
}

/// In-memory corpus assembly used by [`load_corpus`] and by tests:
/// label each sentence and tag it with `split`.
pub fn assemble_corpus(
    sentences: Vec<Sentence>,
    label_source: &LabelSource,
    split: Split,
    language: &str,
) -> Result<LabeledCorpus, CorpusError> {
    let mut corpus = LabeledCorpus::default();
    let mut seen = HashSet::new();
    attach_labels(
        &mut corpus,
        sentences,
        label_source,
        split,
        language,
        Path::new("<memory>"),
        &mut seen,
    )?;
    Ok(corpus)
}

fn attach_labels(
    corpus: &mut LabeledCorpus,
    sentences: Vec<Sentence>,
    label_source: &LabelSource,
    split: Split,
    language: &str,
    path: &Path,
    seen_ids: &mut HashSet<String>,
) -> Result<(), CorpusError> {
    for (index, sentence) in sentences.into_iter().enumerate() {
        let sent_id = match sentence.sent_id() {
            Some(id) => id.to_string(),
            None => match label_source {
                // without an id we cannot join sidecar labels
                LabelSource::Sidecar(_) => {
                    return Err(CorpusError::MissingSentId {
                        path: path.to_path_buf(),
                        index: index + 1,
                    })
                }
                LabelSource::Embedded => format!("{}#{}", path.display(), index + 1),
            },
        };
        if !seen_ids.insert(sent_id.clone()) {
            return Err(CorpusError::DuplicateSentId { sent_id });
        }
        let label = match label_source {
            LabelSource::Embedded => match sentence.meta("irony") {
                Some(value) => parse_label(&sent_id, value)?,
                None => return Err(CorpusError::MissingLabel { sent_id }),
            },
            LabelSource::Sidecar(map) => match map.get(&sent_id) {
                Some(label) => *label,
                None => return Err(CorpusError::MissingLabel { sent_id }),
            },
        };
        corpus.items.push(CorpusItem {
            sentence,
            label,
            split,
            language: language.to_string(),
        });
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Expected per-split, per-class counts, checkable after loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub expected: Vec<(Split, Label, usize)>,
}

/// Parse a `split<TAB>class<TAB>count` manifest (classes `ironic`/`not`,
/// splits `train`/`test`; `#` lines and a header line are ignored).
pub fn parse_manifest(text: &str) -> Result<Manifest, CorpusError> {
    let mut expected = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') || line.starts_with("split\t") {
            continue;
        }
        let bad = || CorpusError::BadManifestLine {
            line: i + 1,
            text: line.to_string(),
        };
        let mut parts = line.split('\t');
        let split = match parts.next() {
            Some("train") => Split::Train,
            Some("test") => Split::Test,
            _ => return Err(bad()),
        };
        let label = match parts.next() {
            Some("ironic") => Label::Ironic,
            Some("not") => Label::NotIronic,
            _ => return Err(bad()),
        };
        let count: usize = parts
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        expected.push((split, label, count));
    }
    Ok(Manifest { expected })
}

/// Check loaded counts against a manifest, failing on the first mismatch.
pub fn check_manifest(corpus: &LabeledCorpus, manifest: &Manifest) -> Result<(), CorpusError> {
    let counts = corpus.counts();
    for &(split, label, expected) in &manifest.expected {
        let found = counts.get(split, label);
        if found != expected {
            return Err(CorpusError::ManifestMismatch {
                split,
                label,
                expected,
                found,
            });
        }
    }
    Ok(())
}
