//! The ten morpho-syntactic feature extractors, each a pure function
//! `Sentence -> FeatureBag`.
//!
//! Surface families: token n-grams (1-3) and char-grams (2-5 over the
//! separator-free concatenation of forms). Dependency families: the
//! deprel of negation cues, 5-7-grams of deprels in linear order,
//! relation tuples around VERB/NOUN/ADJ pivots (pairs of DD=1 neighbors
//! with the pivot blanked to its PoS tag), and head-dependent bigrams
//! collected along tree edges over forms, UPOS tags, or deprels.

use std::collections::BTreeSet;
use std::collections::btree_map::{self, BTreeMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::{DepTree, Sentence};

/// The ten feature namespaces, in canonical order. The order fixes the
/// subset-bitmask encoding used by the feature search (bit 0 = ngrams).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Namespace {
    #[serde(rename = "ngrams")]
    Ngrams,
    #[serde(rename = "chargrams")]
    Chargrams,
    #[serde(rename = "deprelneg")]
    DeprelNeg,
    #[serde(rename = "deprel")]
    Deprel,
    #[serde(rename = "relformVERB")]
    RelformVerb,
    #[serde(rename = "relformNOUN")]
    RelformNoun,
    #[serde(rename = "relformADJ")]
    RelformAdj,
    #[serde(rename = "sidorovform")]
    SidorovForm,
    #[serde(rename = "sidorovupostag")]
    SidorovUpostag,
    #[serde(rename = "sidorovdeprel")]
    SidorovDeprel,
}

impl Namespace {
    pub const ALL: [Namespace; 10] = [
        Namespace::Ngrams,
        Namespace::Chargrams,
        Namespace::DeprelNeg,
        Namespace::Deprel,
        Namespace::RelformVerb,
        Namespace::RelformNoun,
        Namespace::RelformAdj,
        Namespace::SidorovForm,
        Namespace::SidorovUpostag,
        Namespace::SidorovDeprel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Namespace::Ngrams => "ngrams",
            Namespace::Chargrams => "chargrams",
            Namespace::DeprelNeg => "deprelneg",
            Namespace::Deprel => "deprel",
            Namespace::RelformVerb => "relformVERB",
            Namespace::RelformNoun => "relformNOUN",
            Namespace::RelformAdj => "relformADJ",
            Namespace::SidorovForm => "sidorovform",
            Namespace::SidorovUpostag => "sidorovupostag",
            Namespace::SidorovDeprel => "sidorovdeprel",
        }
    }

    /// Position in [`Namespace::ALL`], also the subset-bitmask bit.
    pub fn bit(self) -> u16 {
        Namespace::ALL
            .iter()
            .position(|n| *n == self)
            .expect("namespace is in ALL") as u16
    }
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown feature namespace {0:?}")]
pub struct UnknownNamespace(pub String);

impl FromStr for Namespace {
    type Err = UnknownNamespace;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Namespace::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| UnknownNamespace(s.to_string()))
    }
}

/// Namespaced multiset of feature strings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureBag {
    entries: BTreeMap<(Namespace, String), u32>,
}

impl FeatureBag {
    pub fn new() -> Self {
        FeatureBag::default()
    }

    pub fn add(&mut self, namespace: Namespace, key: String) {
        self.add_count(namespace, key, 1);
    }

    pub fn add_count(&mut self, namespace: Namespace, key: String, count: u32) {
        if count > 0 {
            *self.entries.entry((namespace, key)).or_insert(0) += count;
        }
    }

    pub fn count(&self, namespace: Namespace, key: &str) -> u32 {
        self.entries
            .get(&(namespace, key.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn contains(&self, namespace: Namespace, key: &str) -> bool {
        self.count(namespace, key) > 0
    }

    /// Number of distinct (namespace, key) entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.entries.values().map(|c| *c as u64).sum()
    }

    /// Sum of counts within one namespace.
    pub fn total_in(&self, namespace: Namespace) -> u64 {
        self.iter()
            .filter(|(ns, _, _)| *ns == namespace)
            .map(|(_, _, c)| c as u64)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Namespace, &str, u32)> {
        self.entries
            .iter()
            .map(|((ns, key), count)| (*ns, key.as_str(), *count))
    }

    pub fn merge(&mut self, other: FeatureBag) {
        for ((ns, key), count) in other.entries {
            self.add_count(ns, key, count);
        }
    }

    /// Human-readable `namespace<TAB>key<TAB>count` dump, sorted.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (ns, key, count) in self.iter() {
            out.push_str(&format!("{ns}\t{key}\t{count}\n"));
        }
        out
    }
}

impl IntoIterator for FeatureBag {
    type Item = ((Namespace, String), u32);
    type IntoIter = btree_map::IntoIter<(Namespace, String), u32>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.into_iter()
    }
}

/// Which namespaces to extract, and whether FORM values are lowercased
/// first (treebank text arrives cased; the pipeline normalizes at
/// feature time).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub enabled: BTreeSet<Namespace>,
    pub lowercase_forms: bool,
}

impl FeatureSpec {
    pub fn all() -> Self {
        FeatureSpec {
            enabled: Namespace::ALL.into_iter().collect(),
            lowercase_forms: true,
        }
    }

    pub fn single(namespace: Namespace) -> Self {
        FeatureSpec {
            enabled: [namespace].into_iter().collect(),
            lowercase_forms: true,
        }
    }

    /// Subset-bitmask over [`Namespace::ALL`] (bit i = ALL[i]).
    pub fn from_mask(mask: u16, lowercase_forms: bool) -> Self {
        let enabled = Namespace::ALL
            .into_iter()
            .filter(|ns| mask & (1 << ns.bit()) != 0)
            .collect();
        FeatureSpec {
            enabled,
            lowercase_forms,
        }
    }

    pub fn mask(&self) -> u16 {
        self.enabled.iter().map(|ns| 1 << ns.bit()).sum()
    }

    /// Parse a comma-separated namespace list, e.g.
    /// `"ngrams,chargrams,sidorovdeprel"` or `"all"`.
    pub fn parse_list(list: &str, lowercase_forms: bool) -> Result<Self, UnknownNamespace> {
        if list.trim() == "all" {
            return Ok(FeatureSpec {
                lowercase_forms,
                ..FeatureSpec::all()
            });
        }
        let mut enabled = BTreeSet::new();
        for part in list.split(',') {
            let part = part.trim();
            if !part.is_empty() {
                enabled.insert(part.parse()?);
            }
        }
        Ok(FeatureSpec {
            enabled,
            lowercase_forms,
        })
    }

    /// Comma-joined namespace names in canonical order.
    pub fn names(&self) -> String {
        self.enabled
            .iter()
            .map(|ns| ns.as_str())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Negation-cue word list for one language. A token is a negation cue iff
/// it carries `Polarity=Neg` or its lowercased form is in this lexicon.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NegationLexicon {
    cues: BTreeSet<String>,
}

impl NegationLexicon {
    /// Built-in cue list for `en`, `es`, `fr`, `it`. Unknown languages get
    /// an empty lexicon (`Polarity=Neg` still fires).
    pub fn builtin(language: &str) -> Self {
        let data = match language {
            "en" => include_str!("../data/negation/en.txt"),
            "es" => include_str!("../data/negation/es.txt"),
            "fr" => include_str!("../data/negation/fr.txt"),
            "it" => include_str!("../data/negation/it.txt"),
            _ => "",
        };
        Self::from_lines(data)
    }

    /// One lowercased cue per line; blank lines and `#` comments ignored.
    pub fn from_lines(text: &str) -> Self {
        let cues = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        NegationLexicon { cues }
    }

    pub fn from_cues<I: IntoIterator<Item = S>, S: Into<String>>(cues: I) -> Self {
        NegationLexicon {
            cues: cues.into_iter().map(|c| c.into().to_lowercase()).collect(),
        }
    }

    pub fn contains(&self, lowercased_form: &str) -> bool {
        self.cues.contains(lowercased_form)
    }

    pub fn cues(&self) -> impl Iterator<Item = &str> {
        self.cues.iter().map(|c| c.as_str())
    }

    pub fn len(&self) -> usize {
        self.cues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cues.is_empty()
    }
}

fn form(token: &crate::conllu::Token, lowercase: bool) -> String {
    if lowercase {
        token.form.to_lowercase()
    } else {
        token.form.clone()
    }
}

/// Unigrams, bigrams, and trigrams of tokens, space-joined.
pub fn extract_token_ngrams(sentence: &Sentence, lowercase: bool) -> FeatureBag {
    ngram_bag(sentence, lowercase, 1, 3)
}

/// Token unigrams only (the SVC baseline's bag of words).
pub fn extract_token_unigrams(sentence: &Sentence, lowercase: bool) -> FeatureBag {
    ngram_bag(sentence, lowercase, 1, 1)
}

fn ngram_bag(sentence: &Sentence, lowercase: bool, min_n: usize, max_n: usize) -> FeatureBag {
    let forms: Vec<String> = sentence.tokens.iter().map(|t| form(t, lowercase)).collect();
    let mut bag = FeatureBag::new();
    for n in min_n..=max_n {
        if forms.len() < n {
            continue;
        }
        for window in forms.windows(n) {
            bag.add(Namespace::Ngrams, window.join(" "));
        }
    }
    bag
}

/// Character 2-5-grams over the separator-free concatenation of all token
/// forms (so grams cross token boundaries).
pub fn extract_chargrams(sentence: &Sentence, lowercase: bool) -> FeatureBag {
    let joined: String = sentence
        .tokens
        .iter()
        .map(|t| form(t, lowercase))
        .collect::<Vec<_>>()
        .concat();
    let chars: Vec<char> = joined.chars().collect();
    let mut bag = FeatureBag::new();
    for n in 2..=5usize {
        if chars.len() < n {
            continue;
        }
        for window in chars.windows(n) {
            bag.add(Namespace::Chargrams, window.iter().collect());
        }
    }
    bag
}

/// The dependency relation of every negation cue in the sentence; empty
/// when no negation is present.
pub fn extract_neg_deprel(sentence: &Sentence, lexicon: &NegationLexicon) -> FeatureBag {
    let mut bag = FeatureBag::new();
    for token in &sentence.tokens {
        let is_cue =
            token.has_feat("Polarity", "Neg") || lexicon.contains(&token.form.to_lowercase());
        if is_cue {
            bag.add(Namespace::DeprelNeg, token.deprel.clone());
        }
    }
    bag
}

/// 5-, 6-, and 7-grams of dependency relations in linear token order.
pub fn extract_deprel_ngrams(sentence: &Sentence) -> FeatureBag {
    let deprels: Vec<&str> = sentence.tokens.iter().map(|t| t.deprel.as_str()).collect();
    let mut bag = FeatureBag::new();
    for n in 5..=7usize {
        if deprels.len() < n {
            continue;
        }
        for window in deprels.windows(n) {
            bag.add(Namespace::Deprel, window.join(" "));
        }
    }
    bag
}

/// Pivot PoS class for relation tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotPos {
    Verb,
    Noun,
    Adj,
}

impl PivotPos {
    pub fn upos(self) -> &'static str {
        match self {
            PivotPos::Verb => "VERB",
            PivotPos::Noun => "NOUN",
            PivotPos::Adj => "ADJ",
        }
    }

    pub fn namespace(self) -> Namespace {
        match self {
            PivotPos::Verb => Namespace::RelformVerb,
            PivotPos::Noun => Namespace::RelformNoun,
            PivotPos::Adj => Namespace::RelformAdj,
        }
    }
}

/// For each pivot token of the given PoS class, one tuple per unordered
/// pair of its DD=1 neighbors (dependents plus head): the two forms in
/// linear order with the blanked pivot tag between them, no separators.
pub fn extract_relation_tuples(
    sentence: &Sentence,
    pivot: PivotPos,
    lowercase: bool,
) -> FeatureBag {
    let tree = sentence.tree();
    relation_tuples_with_tree(sentence, &tree, pivot, lowercase)
}

fn relation_tuples_with_tree(
    sentence: &Sentence,
    tree: &DepTree,
    pivot: PivotPos,
    lowercase: bool,
) -> FeatureBag {
    let mut bag = FeatureBag::new();
    for token in &sentence.tokens {
        if token.upos != pivot.upos() {
            continue;
        }
        let neighbors = tree.neighbors(token.id);
        for (i, &a) in neighbors.iter().enumerate() {
            for &b in &neighbors[i + 1..] {
                // neighbors are in linear order, so a precedes b
                let key = format!(
                    "{}{}{}",
                    form(sentence.token(a), lowercase),
                    pivot.upos(),
                    form(sentence.token(b), lowercase)
                );
                bag.add(pivot.namespace(), key);
            }
        }
    }
    bag
}

/// Attribute channel for syntactic (head, dependent) bigrams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SidorovChannel {
    Form,
    Upostag,
    Deprel,
}

impl SidorovChannel {
    pub fn namespace(self) -> Namespace {
        match self {
            SidorovChannel::Form => Namespace::SidorovForm,
            SidorovChannel::Upostag => Namespace::SidorovUpostag,
            SidorovChannel::Deprel => Namespace::SidorovDeprel,
        }
    }
}

/// Head-dependent bigrams following the tree structure rather than linear
/// order: one space-joined `attr(head) attr(dependent)` entry per edge
/// (n-1 total). On the deprel channel the head slot is the head token's
/// own incoming relation, so the root contributes `root`.
pub fn extract_sidorov_bigrams(
    sentence: &Sentence,
    channel: SidorovChannel,
    lowercase: bool,
) -> FeatureBag {
    let tree = sentence.tree();
    sidorov_with_tree(sentence, &tree, channel, lowercase)
}

fn sidorov_with_tree(
    sentence: &Sentence,
    tree: &DepTree,
    channel: SidorovChannel,
    lowercase: bool,
) -> FeatureBag {
    let attr = |id: usize| -> String {
        let token = sentence.token(id);
        match channel {
            SidorovChannel::Form => form(token, lowercase),
            SidorovChannel::Upostag => token.upos.clone(),
            SidorovChannel::Deprel => token.deprel.clone(),
        }
    };
    let mut bag = FeatureBag::new();
    if sentence.is_empty() {
        return bag;
    }
    // pre-order from the root, children in linear order
    let mut stack = vec![tree.root_id()];
    while let Some(head) = stack.pop() {
        for &child in tree.children(head).iter().rev() {
            stack.push(child);
        }
        for &child in tree.children(head) {
            bag.add(channel.namespace(), format!("{} {}", attr(head), attr(child)));
        }
    }
    bag
}

/// Runs every enabled extractor and merges the bags.
#[derive(Debug, Clone)]
pub struct Extractor {
    pub spec: FeatureSpec,
    pub negation: NegationLexicon,
}

impl Extractor {
    pub fn new(spec: FeatureSpec, negation: NegationLexicon) -> Self {
        Extractor { spec, negation }
    }

    /// Extractor for one corpus language with its built-in cue lexicon.
    pub fn for_language(spec: FeatureSpec, language: &str) -> Self {
        Extractor::new(spec, NegationLexicon::builtin(language))
    }

    pub fn extract(&self, sentence: &Sentence) -> FeatureBag {
        let lowercase = self.spec.lowercase_forms;
        let tree = sentence.tree();
        let mut bag = FeatureBag::new();
        for &ns in &self.spec.enabled {
            let part = match ns {
                Namespace::Ngrams => extract_token_ngrams(sentence, lowercase),
                Namespace::Chargrams => extract_chargrams(sentence, lowercase),
                Namespace::DeprelNeg => extract_neg_deprel(sentence, &self.negation),
                Namespace::Deprel => extract_deprel_ngrams(sentence),
                Namespace::RelformVerb => {
                    relation_tuples_with_tree(sentence, &tree, PivotPos::Verb, lowercase)
                }
                Namespace::RelformNoun => {
                    relation_tuples_with_tree(sentence, &tree, PivotPos::Noun, lowercase)
                }
                Namespace::RelformAdj => {
                    relation_tuples_with_tree(sentence, &tree, PivotPos::Adj, lowercase)
                }
                Namespace::SidorovForm => {
                    sidorov_with_tree(sentence, &tree, SidorovChannel::Form, lowercase)
                }
                Namespace::SidorovUpostag => {
                    sidorov_with_tree(sentence, &tree, SidorovChannel::Upostag, lowercase)
                }
                Namespace::SidorovDeprel => {
                    sidorov_with_tree(sentence, &tree, SidorovChannel::Deprel, lowercase)
                }
            };
            bag.merge(part);
        }
        bag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::parse_conllu;

    fn sentence(rows: &[(&str, &str, &str, &str, usize, &str)]) -> Sentence {
        // (id, form, upos, feats, head, deprel)
        let text = rows
            .iter()
            .map(|(id, form, upos, feats, head, deprel)| {
                format!("{id}\t{form}\t{form}\t{upos}\t_\t{feats}\t{head}\t{deprel}\t_\t_")
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n";
        parse_conllu(&text).unwrap().remove(0)
    }

    #[test]
    fn namespace_names_roundtrip() {
        for ns in Namespace::ALL {
            assert_eq!(ns.as_str().parse::<Namespace>().unwrap(), ns);
        }
        assert!("upostag".parse::<Namespace>().is_err());
    }

    #[test]
    fn spec_mask_roundtrip() {
        for mask in [1u16, 0b1010101010, 0b1111111111, 513] {
            let spec = FeatureSpec::from_mask(mask, true);
            assert_eq!(spec.mask(), mask);
        }
        assert_eq!(FeatureSpec::all().mask(), 0b1111111111);
    }

    #[test]
    fn spec_parse_list() {
        let spec = FeatureSpec::parse_list("ngrams, sidorovdeprel", true).unwrap();
        assert_eq!(spec.names(), "ngrams,sidorovdeprel");
        assert!(FeatureSpec::parse_list("nope", true).is_err());
        assert_eq!(FeatureSpec::parse_list("all", false).unwrap().enabled.len(), 10);
    }

    #[test]
    fn single_token_ngrams() {
        let s = sentence(&[("1", "lol", "INTJ", "_", 0, "root")]);
        let bag = extract_token_ngrams(&s, true);
        assert_eq!(bag.len(), 1);
        assert_eq!(bag.count(Namespace::Ngrams, "lol"), 1);
        assert_eq!(bag.total(), 1);
    }

    #[test]
    fn ngram_count_law() {
        // n >= 3 tokens: n + (n-1) + (n-2) = 3n - 3 windows
        let s = sentence(&[
            ("1", "a", "X", "_", 0, "root"),
            ("2", "b", "X", "_", 1, "dep"),
            ("3", "c", "X", "_", 1, "dep"),
            ("4", "d", "X", "_", 1, "dep"),
            ("5", "e", "X", "_", 1, "dep"),
        ]);
        assert_eq!(extract_token_ngrams(&s, true).total(), 3 * 5 - 3);
    }

    #[test]
    fn chargrams_single_short_token() {
        let s = sentence(&[("1", "ab", "X", "_", 0, "root")]);
        let bag = extract_chargrams(&s, true);
        assert_eq!(bag.len(), 1);
        assert_eq!(bag.count(Namespace::Chargrams, "ab"), 1);
    }

    #[test]
    fn chargram_count_law() {
        let s = sentence(&[
            ("1", "abc", "X", "_", 0, "root"),
            ("2", "defg", "X", "_", 1, "dep"),
        ]);
        // L = 7 chars; sum over k=2..5 of max(0, L-k+1) = 6+5+4+3
        assert_eq!(extract_chargrams(&s, true).total(), 6 + 5 + 4 + 3);
    }

    #[test]
    fn chargrams_cross_token_boundaries() {
        let s = sentence(&[
            ("1", "If", "SCONJ", "_", 2, "mark"),
            ("2", "you", "PRON", "_", 0, "root"),
        ]);
        let bag = extract_chargrams(&s, true);
        assert!(bag.contains(Namespace::Chargrams, "fy"));
        assert!(bag.contains(Namespace::Chargrams, "ifyou"));
    }

    #[test]
    fn negation_via_feats_and_lexicon_counts_once() {
        let lex = NegationLexicon::builtin("en");
        // "not" matches both the Polarity=Neg feat and the lexicon: one entry
        let s = sentence(&[
            ("1", "blind", "ADJ", "_", 0, "root"),
            ("2", "not", "PART", "Polarity=Neg", 1, "advmod"),
        ]);
        let bag = extract_neg_deprel(&s, &lex);
        assert_eq!(bag.count(Namespace::DeprelNeg, "advmod"), 1);
        assert_eq!(bag.total(), 1);
    }

    #[test]
    fn negation_absent_gives_empty_bag() {
        let lex = NegationLexicon::builtin("en");
        let s = sentence(&[("1", "great", "ADJ", "_", 0, "root")]);
        assert!(extract_neg_deprel(&s, &lex).is_empty());
    }

    #[test]
    fn two_negation_cues_count_twice() {
        // hand-built fixture: two Polarity=Neg advmod tokens
        let lex = NegationLexicon::builtin("es");
        let s = sentence(&[
            ("1", "viene", "VERB", "_", 0, "root"),
            ("2", "no", "PART", "Polarity=Neg", 1, "advmod"),
            ("3", "va", "VERB", "_", 1, "conj"),
            ("4", "no", "PART", "Polarity=Neg", 3, "advmod"),
        ]);
        let bag = extract_neg_deprel(&s, &lex);
        assert_eq!(bag.count(Namespace::DeprelNeg, "advmod"), 2);
    }

    #[test]
    fn negation_lexicon_fallback_without_feats() {
        let lex = NegationLexicon::builtin("fr");
        let s = sentence(&[
            ("1", "cruel", "ADJ", "_", 0, "root"),
            ("2", "PAS", "ADV", "_", 1, "advmod"),
        ]);
        // lexicon match is case-insensitive on the form
        assert_eq!(extract_neg_deprel(&s, &lex).count(Namespace::DeprelNeg, "advmod"), 1);
    }

    #[test]
    fn deprel_ngrams_below_window_size_empty() {
        let s = sentence(&[
            ("1", "a", "X", "_", 0, "root"),
            ("2", "b", "X", "_", 1, "dep"),
            ("3", "c", "X", "_", 1, "dep"),
            ("4", "d", "X", "_", 1, "dep"),
        ]);
        assert!(extract_deprel_ngrams(&s).is_empty());
    }

    #[test]
    fn deprel_ngram_count_law() {
        let s = sentence(&[
            ("1", "a", "X", "_", 0, "root"),
            ("2", "b", "X", "_", 1, "d1"),
            ("3", "c", "X", "_", 1, "d2"),
            ("4", "d", "X", "_", 1, "d3"),
            ("5", "e", "X", "_", 1, "d4"),
            ("6", "f", "X", "_", 1, "d5"),
        ]);
        // n = 6: two 5-grams + one 6-gram
        let bag = extract_deprel_ngrams(&s);
        assert_eq!(bag.total(), 3);
        assert!(bag.contains(Namespace::Deprel, "root d1 d2 d3 d4"));
        assert!(bag.contains(Namespace::Deprel, "d1 d2 d3 d4 d5"));
        assert!(bag.contains(Namespace::Deprel, "root d1 d2 d3 d4 d5"));
    }

    #[test]
    fn relation_tuples_pair_count() {
        // pivot with |N(v)| = m contributes C(m, 2) tuples
        let s = sentence(&[
            ("1", "x", "NOUN", "_", 2, "nsubj"),
            ("2", "eats", "VERB", "_", 0, "root"),
            ("3", "y", "NOUN", "_", 2, "obj"),
            ("4", "z", "ADV", "_", 2, "advmod"),
        ]);
        // N(2) = {1,3,4} (root pivot has no head neighbor) -> C(3,2) = 3
        let bag = extract_relation_tuples(&s, PivotPos::Verb, true);
        assert_eq!(bag.total(), 3);
        assert!(bag.contains(Namespace::RelformVerb, "xVERBy"));
        assert!(bag.contains(Namespace::RelformVerb, "xVERBz"));
        assert!(bag.contains(Namespace::RelformVerb, "yVERBz"));
    }

    #[test]
    fn relation_tuples_include_pivot_head() {
        let s = sentence(&[
            ("1", "a", "NOUN", "_", 2, "nsubj"),
            ("2", "b", "VERB", "_", 0, "root"),
            ("3", "c", "NOUN", "_", 2, "obj"),
        ]);
        // pivot NOUN id 3: N = {2} -> no pairs; pivot NOUN id 1: N = {2} -> none
        assert!(extract_relation_tuples(&s, PivotPos::Noun, true).is_empty());
        // give token 3 a dependent: now N(3) = {2 (head), 4} -> 1 pair
        let s = sentence(&[
            ("1", "a", "NOUN", "_", 2, "nsubj"),
            ("2", "b", "VERB", "_", 0, "root"),
            ("3", "c", "NOUN", "_", 2, "obj"),
            ("4", "d", "ADJ", "_", 3, "amod"),
        ]);
        let bag = extract_relation_tuples(&s, PivotPos::Noun, true);
        assert_eq!(bag.count(Namespace::RelformNoun, "bNOUNd"), 1);
        assert_eq!(bag.total(), 1);
    }

    #[test]
    fn no_pivot_of_class_empty_bag() {
        let s = sentence(&[("1", "wow", "INTJ", "_", 0, "root")]);
        assert!(extract_relation_tuples(&s, PivotPos::Adj, true).is_empty());
    }

    #[test]
    fn sidorov_edge_count_is_n_minus_1() {
        let s = sentence(&[
            ("1", "a", "X", "_", 3, "dep"),
            ("2", "b", "X", "_", 3, "dep"),
            ("3", "c", "X", "_", 0, "root"),
            ("4", "d", "X", "_", 3, "dep"),
        ]);
        for channel in [
            SidorovChannel::Form,
            SidorovChannel::Upostag,
            SidorovChannel::Deprel,
        ] {
            assert_eq!(extract_sidorov_bigrams(&s, channel, true).total(), 3);
        }
    }

    #[test]
    fn sidorov_deprel_head_slot_uses_incoming_relation() {
        // hand fixture: 2-token sentence root -> punct
        let s = sentence(&[
            ("1", "ok", "INTJ", "_", 0, "root"),
            ("2", ".", "PUNCT", "_", 1, "punct"),
        ]);
        let bag = extract_sidorov_bigrams(&s, SidorovChannel::Deprel, true);
        assert_eq!(bag.count(Namespace::SidorovDeprel, "root punct"), 1);
        assert_eq!(bag.total(), 1);
    }

    #[test]
    fn sidorov_form_lowercase_flag() {
        let s = sentence(&[
            ("1", "If", "SCONJ", "_", 2, "mark"),
            ("2", "Go", "VERB", "_", 0, "root"),
        ]);
        let lower = extract_sidorov_bigrams(&s, SidorovChannel::Form, true);
        assert!(lower.contains(Namespace::SidorovForm, "go if"));
        let cased = extract_sidorov_bigrams(&s, SidorovChannel::Form, false);
        assert!(cased.contains(Namespace::SidorovForm, "Go If"));
    }

    #[test]
    fn extractor_merges_enabled_namespaces() {
        let s = sentence(&[
            ("1", "ok", "INTJ", "_", 0, "root"),
            ("2", ".", "PUNCT", "_", 1, "punct"),
        ]);
        let spec = FeatureSpec::parse_list("ngrams,sidorovupostag", true).unwrap();
        let bag = Extractor::for_language(spec, "en").extract(&s);
        assert_eq!(bag.total_in(Namespace::Ngrams), 3); // 2 unigrams + 1 bigram
        assert_eq!(bag.total_in(Namespace::SidorovUpostag), 1);
        assert_eq!(bag.total_in(Namespace::Chargrams), 0);
    }

    #[test]
    fn extraction_is_deterministic() {
        let s = sentence(&[
            ("1", "If", "SCONJ", "_", 4, "mark"),
            ("2", "you", "PRON", "_", 4, "nsubj"),
            ("3", "are", "AUX", "_", 4, "aux"),
            ("4", "reading", "VERB", "_", 0, "root"),
        ]);
        let ex = Extractor::for_language(FeatureSpec::all(), "en");
        assert_eq!(ex.extract(&s), ex.extract(&s));
    }
}
