//! Synthetic fixture generation: random valid dependency trees for
//! property suites and planted-signal corpora for end-to-end experiments
//! where the gold signal is known by construction.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conllu::{Sentence, Token};
use crate::corpus::{CorpusItem, Label, LabeledCorpus, Split};

const UPOS_POOL: [&str; 10] = [
    "VERB", "NOUN", "ADJ", "ADV", "PRON", "ADP", "DET", "AUX", "PUNCT", "INTJ",
];
const DEPREL_POOL: [&str; 8] = [
    "nsubj", "obj", "advmod", "amod", "obl", "nmod", "det", "punct",
];
const FORM_SYLLABLES: [&str; 12] = [
    "ta", "lo", "mi", "re", "su", "ne", "ka", "vi", "po", "du", "se", "an",
];

fn random_form(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.gen_range(1..=3);
    (0..syllables)
        .map(|_| *FORM_SYLLABLES.choose(rng).expect("non-empty pool"))
        .collect()
}

/// A random valid sentence with `n` tokens: every non-first token in a
/// random permutation attaches to an earlier one, so the tree is
/// connected, single-rooted, and acyclic by construction.
pub fn random_sentence(rng: &mut ChaCha8Rng, n: usize) -> Sentence {
    assert!(n >= 1);
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0usize; n + 1];
    for (position, &id) in order.iter().enumerate().skip(1) {
        heads[id] = order[rng.gen_range(0..position)];
    }
    let root = order[0];

    let tokens = (1..=n)
        .map(|id| {
            let form = random_form(rng);
            let feats = if rng.gen_bool(0.05) {
                vec![("Polarity".to_string(), "Neg".to_string())]
            } else {
                Vec::new()
            };
            Token {
                id,
                lemma: form.clone(),
                form,
                upos: UPOS_POOL.choose(rng).expect("non-empty pool").to_string(),
                xpos: None,
                feats,
                head: heads[id],
                deprel: if id == root {
                    "root".to_string()
                } else {
                    DEPREL_POOL.choose(rng).expect("non-empty pool").to_string()
                },
                deps: None,
                misc: None,
            }
        })
        .collect();
    Sentence {
        tokens,
        metadata: Vec::new(),
        mwt_spans: Vec::new(),
        empty_nodes: 0,
    }
}

/// Settings for [`planted_corpus`].
#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub items: usize,
    /// Fraction of items tagged as the test split.
    pub test_fraction: f64,
    pub language: String,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            items: 1000,
            test_fraction: 0.2,
            language: "en".to_string(),
            seed: 42,
        }
    }
}

/// The deprel whose presence under the root marks the ironic class of a
/// planted corpus; the head-dependent pair is ("root", this).
pub const PLANTED_MARKER_DEPREL: &str = "parataxis";

/// A balanced corpus where the ironic class is marked ONLY by the
/// head-dependent deprel pair ("root", "parataxis"): token 2 of ironic
/// sentences carries the marker relation, which never occurs elsewhere.
/// Sentences stay under 5 tokens so linear-order deprel n-grams (whose
/// smallest window is 5) carry no signal, and forms/UPOS tags are drawn
/// from shared pools for both classes.
pub fn planted_corpus(config: &PlantedConfig) -> LabeledCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut items = Vec::with_capacity(config.items);
    let test_from = ((config.items as f64) * (1.0 - config.test_fraction)).round() as usize;
    for index in 0..config.items {
        let ironic = index % 2 == 0;
        let n = rng.gen_range(3..=4);
        // the random deprel pool cannot produce the marker relation
        let mut sentence = random_sentence(&mut rng, n);
        debug_assert!(sentence.tokens.iter().all(|t| t.deprel != PLANTED_MARKER_DEPREL));
        // strip negation feats: the signal must live in one namespace only
        for token in &mut sentence.tokens {
            token.feats.clear();
        }
        if ironic {
            let root_id = sentence
                .tokens
                .iter()
                .find(|t| t.head == 0)
                .expect("generated sentences have a root")
                .id;
            // with n >= 2 the root always has at least one dependent
            let dependent = sentence
                .tokens
                .iter()
                .position(|t| t.head == root_id)
                .expect("root has a dependent");
            sentence.tokens[dependent].deprel = PLANTED_MARKER_DEPREL.to_string();
        }
        sentence.metadata = vec![
            ("sent_id".to_string(), Some(format!("synth-{index}"))),
            (
                "irony".to_string(),
                Some(if ironic { "1" } else { "0" }.to_string()),
            ),
        ];
        items.push(CorpusItem {
            sentence,
            label: if ironic { Label::Ironic } else { Label::NotIronic },
            split: if index < test_from { Split::Train } else { Split::Test },
            language: config.language.clone(),
        });
    }
    LabeledCorpus { items }
}

/// The form that marks the ironic class of a [`lexical_corpus`]; the
/// syllable pool cannot produce it.
pub const PLANTED_MARKER_FORM: &str = "xyzzy";

/// A balanced corpus where the ironic class is marked by the presence of
/// one token form, so even a plain unigram bag separates it.
pub fn lexical_corpus(config: &PlantedConfig) -> LabeledCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut items = Vec::with_capacity(config.items);
    let test_from = ((config.items as f64) * (1.0 - config.test_fraction)).round() as usize;
    for index in 0..config.items {
        let ironic = index % 2 == 0;
        let n = rng.gen_range(3..=6);
        let mut sentence = random_sentence(&mut rng, n);
        if ironic {
            let slot = rng.gen_range(0..n);
            sentence.tokens[slot].form = PLANTED_MARKER_FORM.to_string();
            sentence.tokens[slot].lemma = PLANTED_MARKER_FORM.to_string();
        }
        sentence.metadata = vec![
            ("sent_id".to_string(), Some(format!("lex-{index}"))),
            (
                "irony".to_string(),
                Some(if ironic { "1" } else { "0" }.to_string()),
            ),
        ];
        items.push(CorpusItem {
            sentence,
            label: if ironic { Label::Ironic } else { Label::NotIronic },
            split: if index < test_from { Split::Train } else { Split::Test },
            language: config.language.clone(),
        });
    }
    LabeledCorpus { items }
}

/// Small labeled corpora for the four languages, for exercising the CLI
/// and the search end to end.
pub fn synthetic_language_suite(seed: u64, items_per_language: usize) -> Vec<(String, LabeledCorpus)> {
    ["en", "es", "fr", "it"]
        .iter()
        .enumerate()
        .map(|(i, lang)| {
            let config = PlantedConfig {
                items: items_per_language,
                language: lang.to_string(),
                seed: seed ^ (i as u64 + 1),
                ..PlantedConfig::default()
            };
            (lang.to_string(), planted_corpus(&config))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{parse_conllu, serialize_conllu};
    use crate::features::{extract_sidorov_bigrams, Namespace, SidorovChannel};

    #[test]
    fn random_sentences_are_valid_conllu() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = rng.gen_range(1..=30);
            let sentence = random_sentence(&mut rng, n);
            let text = serialize_conllu(std::slice::from_ref(&sentence));
            let parsed = parse_conllu(&text).expect("generated sentence must validate");
            assert_eq!(parsed[0].len(), n);
        }
    }

    #[test]
    fn planted_marker_separates_classes() {
        let corpus = planted_corpus(&PlantedConfig {
            items: 100,
            ..PlantedConfig::default()
        });
        assert_eq!(corpus.items.len(), 100);
        let marker_key = format!("root {PLANTED_MARKER_DEPREL}");
        for item in &corpus.items {
            let bag = extract_sidorov_bigrams(&item.sentence, SidorovChannel::Deprel, true);
            let has_marker = bag.contains(Namespace::SidorovDeprel, &marker_key);
            assert_eq!(has_marker, item.label.is_ironic(), "sentence {:?}", item.sentence);
            // no deprel 5-grams can exist below 5 tokens
            assert!(item.sentence.len() < 5);
        }
        let counts = corpus.counts();
        assert_eq!(counts.train_total() + counts.test_total(), 100);
        assert!(counts.test_total() > 0);
    }

    #[test]
    fn lexical_marker_separates_classes() {
        let corpus = lexical_corpus(&PlantedConfig {
            items: 50,
            ..PlantedConfig::default()
        });
        for item in &corpus.items {
            let has_marker = item
                .sentence
                .tokens
                .iter()
                .any(|t| t.form == PLANTED_MARKER_FORM);
            assert_eq!(has_marker, item.label.is_ironic());
        }
    }

    #[test]
    fn suite_covers_four_languages() {
        let suite = synthetic_language_suite(3, 24);
        assert_eq!(suite.len(), 4);
        for (lang, corpus) in &suite {
            assert!(["en", "es", "fr", "it"].contains(&lang.as_str()));
            assert_eq!(corpus.items.len(), 24);
            assert!(corpus.items.iter().all(|i| &i.language == lang));
        }
    }
}
