//! Shared fixtures and independent brute-force feature oracles for the
//! integration suites. The oracles are written straight from the feature
//! definitions with plain index loops; they never touch the extractor
//! code paths they check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use depirony::conllu::{parse_conllu, Sentence};
use depirony::features::{FeatureBag, Namespace, NegationLexicon};

pub const ITALIAN_TWEET: &str = include_str!("../fixtures/italian_tweet.conllu");
pub const ENGLISH_TWEET: &str = include_str!("../fixtures/english_tweet.conllu");

pub fn italian_tweet() -> Sentence {
    parse_conllu(ITALIAN_TWEET).expect("italian fixture parses").remove(0)
}

pub fn english_tweet() -> Sentence {
    parse_conllu(ENGLISH_TWEET).expect("english fixture parses").remove(0)
}

pub type KeyCounts = BTreeMap<String, u32>;

fn bump(map: &mut KeyCounts, key: String) {
    *map.entry(key).or_insert(0) += 1;
}

fn forms(sentence: &Sentence, lowercase: bool) -> Vec<String> {
    sentence
        .tokens
        .iter()
        .map(|t| {
            if lowercase {
                t.form.to_lowercase()
            } else {
                t.form.clone()
            }
        })
        .collect()
}

/// Contiguous token windows of length 1, 2, 3 joined by spaces.
pub fn oracle_ngrams(sentence: &Sentence, lowercase: bool) -> KeyCounts {
    let forms = forms(sentence, lowercase);
    let mut out = KeyCounts::new();
    for start in 0..forms.len() {
        for len in 1..=3usize {
            if start + len <= forms.len() {
                bump(&mut out, forms[start..start + len].join(" "));
            }
        }
    }
    out
}

/// Character windows of length 2..5 over the separator-free
/// concatenation of token forms.
pub fn oracle_chargrams(sentence: &Sentence, lowercase: bool) -> KeyCounts {
    let joined: Vec<char> = forms(sentence, lowercase).concat().chars().collect();
    let mut out = KeyCounts::new();
    for start in 0..joined.len() {
        for len in 2..=5usize {
            if start + len <= joined.len() {
                bump(&mut out, joined[start..start + len].iter().collect());
            }
        }
    }
    out
}

/// The deprel of every token that is a negation cue (Polarity=Neg or a
/// lexicon form).
pub fn oracle_neg_deprel(sentence: &Sentence, lexicon: &NegationLexicon) -> KeyCounts {
    let mut out = KeyCounts::new();
    for token in &sentence.tokens {
        let polarity = token
            .feats
            .iter()
            .any(|(k, v)| k == "Polarity" && v == "Neg");
        if polarity || lexicon.contains(&token.form.to_lowercase()) {
            bump(&mut out, token.deprel.clone());
        }
    }
    out
}

/// Contiguous deprel windows of length 5, 6, 7 in linear order.
pub fn oracle_deprel_ngrams(sentence: &Sentence) -> KeyCounts {
    let deprels: Vec<&str> = sentence.tokens.iter().map(|t| t.deprel.as_str()).collect();
    let mut out = KeyCounts::new();
    for start in 0..deprels.len() {
        for len in 5..=7usize {
            if start + len <= deprels.len() {
                bump(&mut out, deprels[start..start + len].join(" "));
            }
        }
    }
    out
}

/// DD = 1 neighborhood of a token, computed by scanning the token list:
/// its dependents plus its head when it has one.
pub fn oracle_neighbors(sentence: &Sentence, id: usize) -> Vec<usize> {
    let mut out: Vec<usize> = sentence
        .tokens
        .iter()
        .filter(|t| t.head == id)
        .map(|t| t.id)
        .collect();
    let head = sentence.tokens[id - 1].head;
    if head != 0 {
        out.push(head);
    }
    out.sort_unstable();
    out
}

/// Relation tuples around pivots of `pivot_upos`: every unordered pair
/// of DD = 1 neighbors, forms in linear order, pivot blanked to its tag.
pub fn oracle_relation_tuples(
    sentence: &Sentence,
    pivot_upos: &str,
    lowercase: bool,
) -> KeyCounts {
    let forms = forms(sentence, lowercase);
    let mut out = KeyCounts::new();
    for pivot in &sentence.tokens {
        if pivot.upos != pivot_upos {
            continue;
        }
        let neighbors = oracle_neighbors(sentence, pivot.id);
        for i in 0..neighbors.len() {
            for j in i + 1..neighbors.len() {
                bump(
                    &mut out,
                    format!(
                        "{}{}{}",
                        forms[neighbors[i] - 1],
                        pivot_upos,
                        forms[neighbors[j] - 1]
                    ),
                );
            }
        }
    }
    out
}

/// One `attr(head) attr(dependent)` bigram per tree edge, scanning the
/// token list directly (no traversal).
pub fn oracle_sidorov(sentence: &Sentence, channel: &str, lowercase: bool) -> KeyCounts {
    let attr = |id: usize| -> String {
        let token = &sentence.tokens[id - 1];
        match channel {
            "form" => {
                if lowercase {
                    token.form.to_lowercase()
                } else {
                    token.form.clone()
                }
            }
            "upostag" => token.upos.clone(),
            "deprel" => token.deprel.clone(),
            other => panic!("unknown channel {other}"),
        }
    };
    let mut out = KeyCounts::new();
    for token in &sentence.tokens {
        if token.head != 0 {
            bump(&mut out, format!("{} {}", attr(token.head), attr(token.id)));
        }
    }
    out
}

/// Collapse one namespace of a [`FeatureBag`] to a key -> count map for
/// comparison against the oracles.
pub fn bag_namespace(bag: &FeatureBag, namespace: Namespace) -> KeyCounts {
    bag.iter()
        .filter(|(ns, _, _)| *ns == namespace)
        .map(|(_, key, count)| (key.to_string(), count))
        .collect()
}
