//! Vocabulary construction over feature bags, sparse count vectors, and
//! the svmlight-style matrix format.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;
use crate::features::{FeatureBag, FeatureSpec, Namespace};

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("cannot build a vocabulary from an empty training split")]
    EmptyTrainingSplit,
    #[error("feature spec enables no namespaces")]
    EmptySpec,
    #[error("namespace {0} requested but absent from the vocabulary")]
    NamespaceNotInVocabulary(Namespace),
    #[error("sparse indices must be strictly increasing with positive values")]
    MalformedSparseVector,
    #[error("line {line}: {message}")]
    MalformedMatrixLine { line: usize, message: String },
    #[error("line {line}: malformed vocabulary row {text:?}")]
    MalformedVocabularyLine { line: usize, text: String },
    #[error("vocabulary indices are not dense 0..{expected}")]
    NonDenseVocabulary { expected: usize },
}

#[derive(Clone, Serialize, Deserialize)]
struct VocabularyData {
    entries: Vec<(Namespace, String)>,
    namespaces: BTreeSet<Namespace>,
}

/// Frozen (namespace, key) -> column-index mapping, built from the
/// training split only. Indices are dense `0..len`, assigned by sorting
/// `(namespace-name, key)` lexicographically, so two builds over the same
/// data always agree.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    entries: Vec<(Namespace, String)>,
    namespaces: BTreeSet<Namespace>,
    lookup: HashMap<(Namespace, String), u32>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(data: VocabularyData) -> Self {
        let lookup = data
            .entries
            .iter()
            .enumerate()
            .map(|(i, (ns, key))| ((*ns, key.clone()), i as u32))
            .collect();
        Vocabulary {
            entries: data.entries,
            namespaces: data.namespaces,
            lookup,
        }
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(vocab: Vocabulary) -> Self {
        VocabularyData {
            entries: vocab.entries,
            namespaces: vocab.namespaces,
        }
    }
}

impl Vocabulary {
    /// Build over the enabled namespaces of `spec` from training bags,
    /// keeping entries seen in at least `min_df` bags (default 1).
    pub fn build<'a, I>(train_bags: I, spec: &FeatureSpec) -> Result<Vocabulary, VectorizeError>
    where
        I: IntoIterator<Item = &'a FeatureBag>,
    {
        Vocabulary::build_with_min_df(train_bags, spec, 1)
    }

    pub fn build_with_min_df<'a, I>(
        train_bags: I,
        spec: &FeatureSpec,
        min_df: usize,
    ) -> Result<Vocabulary, VectorizeError>
    where
        I: IntoIterator<Item = &'a FeatureBag>,
    {
        if spec.enabled.is_empty() {
            return Err(VectorizeError::EmptySpec);
        }
        let mut document_freq: HashMap<(Namespace, &str), usize> = HashMap::new();
        let mut seen_any = false;
        for bag in train_bags {
            seen_any = true;
            for (ns, key, _) in bag.iter() {
                if spec.enabled.contains(&ns) {
                    *document_freq.entry((ns, key)).or_insert(0) += 1;
                }
            }
        }
        if !seen_any {
            return Err(VectorizeError::EmptyTrainingSplit);
        }
        let mut entries: Vec<(Namespace, String)> = document_freq
            .into_iter()
            .filter(|(_, df)| *df >= min_df.max(1))
            .map(|((ns, key), _)| (ns, key.to_string()))
            .collect();
        entries.sort_by(|(ns_a, key_a), (ns_b, key_b)| {
            (ns_a.as_str(), key_a.as_str()).cmp(&(ns_b.as_str(), key_b.as_str()))
        });
        let lookup = entries
            .iter()
            .enumerate()
            .map(|(i, (ns, key))| ((*ns, key.clone()), i as u32))
            .collect();
        Ok(Vocabulary {
            entries,
            namespaces: spec.enabled.clone(),
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, namespace: Namespace, key: &str) -> Option<u32> {
        // allocation-free would need a borrowed key pair; lookups are not hot
        self.lookup.get(&(namespace, key.to_string())).copied()
    }

    pub fn entry(&self, index: u32) -> Option<(Namespace, &str)> {
        self.entries
            .get(index as usize)
            .map(|(ns, key)| (*ns, key.as_str()))
    }

    /// Namespaces this vocabulary was built over.
    pub fn namespaces(&self) -> &BTreeSet<Namespace> {
        &self.namespaces
    }

    /// `index<TAB>namespace<TAB>key` rows, ascending index, LF endings.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, (ns, key)) in self.entries.iter().enumerate() {
            writeln!(out, "{i}\t{ns}\t{key}").expect("write to String");
        }
        out
    }

    /// Parse the TSV produced by [`Vocabulary::to_tsv`]; `#` lines are
    /// ignored.
    pub fn parse_tsv(text: &str) -> Result<Vocabulary, VectorizeError> {
        let mut rows: Vec<(usize, Namespace, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || VectorizeError::MalformedVocabularyLine {
                line: i + 1,
                text: line.to_string(),
            };
            let mut parts = line.splitn(3, '\t');
            let index: usize = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
            let ns: Namespace = parts
                .next()
                .and_then(|p| p.parse().ok())
                .ok_or_else(bad)?;
            let key = parts.next().ok_or_else(bad)?.to_string();
            rows.push((index, ns, key));
        }
        rows.sort_by_key(|(i, _, _)| *i);
        if rows.iter().enumerate().any(|(pos, (i, _, _))| pos != *i) {
            return Err(VectorizeError::NonDenseVocabulary {
                expected: rows.len(),
            });
        }
        let entries: Vec<(Namespace, String)> =
            rows.into_iter().map(|(_, ns, key)| (ns, key)).collect();
        let namespaces = entries.iter().map(|(ns, _)| *ns).collect();
        let lookup = entries
            .iter()
            .enumerate()
            .map(|(i, (ns, key))| ((*ns, key.clone()), i as u32))
            .collect();
        Ok(Vocabulary {
            entries,
            namespaces,
            lookup,
        })
    }
}

/// Sparse vector of raw feature counts: strictly increasing indices,
/// positive values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn empty() -> Self {
        SparseVector::default()
    }

    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Result<Self, VectorizeError> {
        pairs.sort_by_key(|(i, _)| *i);
        let ascending = pairs.windows(2).all(|w| w[0].0 < w[1].0);
        let positive = pairs.iter().all(|(_, v)| *v > 0.0 && v.is_finite());
        if !ascending || !positive {
            return Err(VectorizeError::MalformedSparseVector);
        }
        Ok(SparseVector { entries: pairs })
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v).sum()
    }

    /// Value at `index` (0.0 when absent).
    pub fn get(&self, index: u32) -> f64 {
        self.entries
            .binary_search_by_key(&index, |(i, _)| *i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    /// Largest stored index, if any.
    pub fn max_index(&self) -> Option<u32> {
        self.entries.last().map(|(i, _)| *i)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|(i, v)| dense[*i as usize] * v)
            .sum()
    }
}

/// Map a bag to counts of in-vocabulary features; out-of-vocabulary
/// features are dropped. With `binary`, every present feature counts 1.
/// Every namespace of `spec` must be covered by the vocabulary.
pub fn vectorize(
    bag: &FeatureBag,
    vocab: &Vocabulary,
    spec: &FeatureSpec,
    binary: bool,
) -> Result<SparseVector, VectorizeError> {
    for ns in &spec.enabled {
        if !vocab.namespaces().contains(ns) {
            return Err(VectorizeError::NamespaceNotInVocabulary(*ns));
        }
    }
    let mut pairs: Vec<(u32, f64)> = Vec::new();
    for (ns, key, count) in bag.iter() {
        if !spec.enabled.contains(&ns) {
            continue;
        }
        if let Some(index) = vocab.index_of(ns, key) {
            let value = if binary { 1.0 } else { count as f64 };
            pairs.push((index, value));
        }
    }
    pairs.sort_by_key(|(i, _)| *i);
    Ok(SparseVector { entries: pairs })
}

/// All non-empty subsets of the given namespaces in binary-counting order
/// (mask 1, 2, 3, ... over list positions).
pub fn enumerate_subsets(namespaces: &[Namespace], lowercase_forms: bool) -> Vec<FeatureSpec> {
    let k = namespaces.len();
    assert!(k <= 16, "subset enumeration limited to 16 namespaces");
    (1u32..(1u32 << k))
        .map(|mask| {
            let enabled = namespaces
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, ns)| *ns)
                .collect();
            FeatureSpec {
                enabled,
                lowercase_forms,
            }
        })
        .collect()
}

fn format_value(value: f64) -> String {
    // shortest round-trip representation; integral counts print bare
    format!("{value}")
}

/// Write labeled rows in svmlight form: `label index:value ...` with
/// ascending indices, one row per example, LF endings. `header` lines are
/// emitted first, `#`-prefixed.
pub fn write_svmlight(labels: &[Label], rows: &[SparseVector], header: &[String]) -> String {
    let mut out = String::new();
    for line in header {
        writeln!(out, "# {line}").expect("write to String");
    }
    for (label, row) in labels.iter().zip(rows) {
        out.push_str(&label.as_u8().to_string());
        for (index, value) in row.entries() {
            out.push(' ');
            out.push_str(&index.to_string());
            out.push(':');
            out.push_str(&format_value(*value));
        }
        out.push('\n');
    }
    out
}

/// Parse the svmlight matrix format written by [`write_svmlight`].
pub fn parse_svmlight(text: &str) -> Result<(Vec<Label>, Vec<SparseVector>), VectorizeError> {
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: &str| VectorizeError::MalformedMatrixLine {
            line: i + 1,
            message: message.to_string(),
        };
        let mut parts = line.split_whitespace();
        let label = parts
            .next()
            .and_then(|p| p.parse::<i64>().ok())
            .and_then(Label::from_int)
            .ok_or_else(|| bad("label must be 0 or 1"))?;
        let mut pairs = Vec::new();
        for part in parts {
            let (idx, val) = part
                .split_once(':')
                .ok_or_else(|| bad("expected index:value"))?;
            let index: u32 = idx.parse().map_err(|_| bad("bad feature index"))?;
            let value: f64 = val.parse().map_err(|_| bad("bad feature value"))?;
            pairs.push((index, value));
        }
        let ascending = pairs.windows(2).all(|w| w[0].0 < w[1].0);
        if !ascending {
            return Err(bad("feature indices must be strictly ascending"));
        }
        labels.push(label);
        rows.push(SparseVector { entries: pairs });
    }
    Ok((labels, rows))
}
