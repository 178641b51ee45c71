//! Dependency-context word embeddings: skip-gram with negative sampling
//! over (word, context) pairs read off tree edges, in the style of the
//! dependency-based word2vec variant.
//!
//! Each edge (head, dependent, relation) yields two pairs: the head with
//! context `dependent/rel`, and the dependent with context
//! `head/rel⁻¹`. Negatives are drawn from the context unigram
//! distribution raised to 3/4.

use std::cell::UnsafeCell;
use std::collections::HashMap;
use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::conllu::Sentence;

/// Marker appended to a relation seen from the dependent's viewpoint.
pub const INVERSE_MARKER: &str = "⁻¹";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextPair {
    pub word: String,
    pub context: String,
}

/// Read off the 2(n-1) context pairs of each sentence (the root's
/// virtual edge is excluded).
pub fn extract_contexts(sentences: &[Sentence], lowercase: bool) -> Vec<ContextPair> {
    let mut pairs = Vec::new();
    for sentence in sentences {
        for token in &sentence.tokens {
            if token.head == 0 {
                continue;
            }
            let head = sentence.token(token.head);
            let head_form = if lowercase {
                head.form.to_lowercase()
            } else {
                head.form.clone()
            };
            let dep_form = if lowercase {
                token.form.to_lowercase()
            } else {
                token.form.clone()
            };
            pairs.push(ContextPair {
                word: head_form.clone(),
                context: format!("{dep_form}/{}", token.deprel),
            });
            pairs.push(ContextPair {
                word: dep_form,
                context: format!("{head_form}/{}{INVERSE_MARKER}", token.deprel),
            });
        }
    }
    pairs
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("no training pairs left after min_count filtering")]
    EmptyVocabulary,
    #[error("word {0:?} is not in the embedding vocabulary")]
    UnknownWord(String),
    #[error("embedding file is malformed at line {line}: {message}")]
    MalformedFile { line: usize, message: String },
}

/// SGNS hyper-parameters. The desk-scale tests use small dimensions; the
/// defaults match common practice for these embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsConfig {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub seed: u64,
    /// Lock-free parallel updates; faster on large corpora but forfeits
    /// bit-reproducibility.
    pub parallel: bool,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 300,
            negatives: 5,
            epochs: 5,
            min_count: 2,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            seed: 42,
            parallel: false,
        }
    }
}

/// Trained word and context vectors. Rows of `word_vectors` align with
/// `words` (lexicographically sorted), likewise for contexts.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub words: Vec<String>,
    pub contexts: Vec<String>,
    pub word_vectors: Vec<f64>,
    pub context_vectors: Vec<f64>,
    pub dim: usize,
}

impl EmbeddingTable {
    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        let index = self.words.binary_search_by(|w| w.as_str().cmp(word)).ok()?;
        Some(&self.word_vectors[index * self.dim..(index + 1) * self.dim])
    }

    /// Standard text vector format: `vocab_size dim` header, then one
    /// `word v1 .. vd` line per word, space-separated, LF endings.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.words.len(), self.dim);
        for (i, word) in self.words.iter().enumerate() {
            out.push_str(word);
            for v in &self.word_vectors[i * self.dim..(i + 1) * self.dim] {
                write!(out, " {v}").expect("write to String");
            }
            out.push('\n');
        }
        out
    }

    /// Parse the format written by [`EmbeddingTable::to_text`] (word
    /// vectors only; contexts are not part of the interchange format).
    pub fn from_text(text: &str) -> Result<EmbeddingTable, EmbedError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(EmbedError::MalformedFile {
            line: 1,
            message: "missing header".to_string(),
        })?;
        let bad = |line: usize, message: &str| EmbedError::MalformedFile {
            line,
            message: message.to_string(),
        };
        let mut parts = header.split_whitespace();
        let vocab_size: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| bad(1, "bad vocab size"))?;
        let dim: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| bad(1, "bad dimension"))?;
        let mut words = Vec::with_capacity(vocab_size);
        let mut vectors = Vec::with_capacity(vocab_size * dim);
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let word = parts.next().ok_or_else(|| bad(i + 1, "missing word"))?;
            let values: Vec<f64> = parts
                .map(|p| p.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad(i + 1, "bad vector value"))?;
            if values.len() != dim {
                return Err(bad(i + 1, "wrong vector length"));
            }
            words.push(word.to_string());
            vectors.extend(values);
        }
        if words.len() != vocab_size {
            return Err(bad(1, "vocab size does not match line count"));
        }
        Ok(EmbeddingTable {
            words,
            contexts: Vec::new(),
            word_vectors: vectors,
            context_vectors: Vec::new(),
            dim,
        })
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Top-k words by cosine to `word` (the query itself excluded), ties
/// broken lexicographically. `k` larger than the vocabulary returns the
/// full ranking.
pub fn nearest_neighbors(
    table: &EmbeddingTable,
    word: &str,
    k: usize,
) -> Result<Vec<(String, f64)>, EmbedError> {
    let query = table
        .vector(word)
        .ok_or_else(|| EmbedError::UnknownWord(word.to_string()))?;
    let mut scored: Vec<(String, f64)> = table
        .words
        .iter()
        .filter(|w| w.as_str() != word)
        .map(|w| {
            let v = table.vector(w).expect("vocabulary word has a vector");
            (w.clone(), cosine(query, v))
        })
        .collect();
    scored.sort_by(|(wa, ca), (wb, cb)| {
        cb.partial_cmp(ca)
            .expect("finite cosine")
            .then_with(|| wa.cmp(wb))
    });
    scored.truncate(k);
    Ok(scored)
}

/// Loss and gradients of one SGNS step given the positive context and the
/// sampled negatives: `-log s(w.c) - sum_k log s(-w.n_k)`. Returns
/// `(loss, grad_word, grad_context, grad_negatives)`. This is the exact
/// objective the trainer steps on, used by the finite-difference checks.
pub fn sgns_pair_loss_grad(
    word: &[f64],
    context: &[f64],
    negatives: &[&[f64]],
) -> (f64, Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let sigmoid = |z: f64| {
        if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        }
    };
    // -ln s(z) = softplus(-z), stably
    let softplus = |z: f64| z.max(0.0) + (-z.abs()).exp().ln_1p();

    let dim = word.len();
    let mut grad_word = vec![0.0; dim];
    let dot_pos: f64 = word.iter().zip(context).map(|(a, b)| a * b).sum();
    let mut loss = softplus(-dot_pos);
    let g_pos = sigmoid(dot_pos) - 1.0; // d loss / d dot
    let mut grad_context = vec![0.0; dim];
    for d in 0..dim {
        grad_word[d] += g_pos * context[d];
        grad_context[d] = g_pos * word[d];
    }
    let mut grad_negatives = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let dot_neg: f64 = word.iter().zip(*neg).map(|(a, b)| a * b).sum();
        loss += softplus(dot_neg);
        let g_neg = sigmoid(dot_neg);
        let mut grad_neg = vec![0.0; dim];
        for d in 0..dim {
            grad_word[d] += g_neg * neg[d];
            grad_neg[d] = g_neg * word[d];
        }
        grad_negatives.push(grad_neg);
    }
    (loss, grad_word, grad_context, grad_negatives)
}

struct Vocab {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

fn build_vocab<'a>(
    values: impl Iterator<Item = &'a str>,
    min_count: usize,
) -> (Vocab, Vec<usize>) {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for value in values {
        *counts.entry(value).or_insert(0) += 1;
    }
    let mut items: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .map(|(v, c)| (v.to_string(), c))
        .collect();
    items.sort_by(|(a, _), (b, _)| a.cmp(b));
    let index = items
        .iter()
        .enumerate()
        .map(|(i, (v, _))| (v.clone(), i))
        .collect();
    let counts = items.iter().map(|(_, c)| *c).collect();
    (
        Vocab {
            items: items.into_iter().map(|(v, _)| v).collect(),
            index,
        },
        counts,
    )
}

/// Shared mutable vector table for the racy parallel mode. The data
/// races are benign in the usual hogwild sense; results stay finite but
/// are not reproducible.
struct RacyTable(UnsafeCell<Vec<f64>>);

unsafe impl Sync for RacyTable {}

impl RacyTable {
    #[allow(clippy::mut_from_ref)]
    unsafe fn get(&self) -> &mut Vec<f64> {
        &mut *self.0.get()
    }
}

/// Train SGNS embeddings over the pairs. Deterministic (byte-identical
/// tables) for a fixed seed in sequential mode; `epochs = 0` returns the
/// seeded initialization unchanged.
pub fn train_sgns(pairs: &[ContextPair], config: &SgnsConfig) -> Result<EmbeddingTable, EmbedError> {
    let (word_vocab, _) = build_vocab(pairs.iter().map(|p| p.word.as_str()), config.min_count);
    let (context_vocab, context_counts) =
        build_vocab(pairs.iter().map(|p| p.context.as_str()), config.min_count);

    let indexed: Vec<(usize, usize)> = pairs
        .iter()
        .filter_map(|p| {
            Some((
                *word_vocab.index.get(&p.word)?,
                *context_vocab.index.get(&p.context)?,
            ))
        })
        .collect();
    if indexed.is_empty() || word_vocab.items.is_empty() || context_vocab.items.is_empty() {
        return Err(EmbedError::EmptyVocabulary);
    }

    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut word_vectors = vec![0.0f64; word_vocab.items.len() * dim];
    for v in &mut word_vectors {
        *v = (rng.gen::<f64>() - 0.5) / dim as f64;
    }
    // context vectors start at zero, as in the reference implementations
    let context_vectors = vec![0.0f64; context_vocab.items.len() * dim];

    // negative-sampling distribution: unigram^(3/4) over contexts
    let weights: Vec<f64> = context_counts.iter().map(|c| (*c as f64).powf(0.75)).collect();
    let sampler = WeightedIndex::new(&weights).expect("non-empty positive weights");

    let mut table = EmbeddingTable {
        words: word_vocab.items,
        contexts: context_vocab.items,
        word_vectors,
        context_vectors,
        dim,
    };
    if config.epochs == 0 {
        return Ok(table);
    }

    if config.parallel {
        train_parallel(&mut table, &indexed, &sampler, config, &mut rng);
    } else {
        train_sequential(&mut table, &indexed, &sampler, config, &mut rng);
    }
    Ok(table)
}

fn sgd_step(
    words: &mut [f64],
    contexts: &mut [f64],
    dim: usize,
    word: usize,
    context: usize,
    negatives: &[usize],
    lr: f64,
) {
    let sigmoid = |z: f64| {
        if z >= 0.0 {
            1.0 / (1.0 + (-z).exp())
        } else {
            let e = z.exp();
            e / (1.0 + e)
        }
    };
    let w_base = word * dim;
    let mut word_update = vec![0.0f64; dim];
    for (i, &ctx) in std::iter::once(&context).chain(negatives).enumerate() {
        let c_base = ctx * dim;
        let dot: f64 = (0..dim).map(|d| words[w_base + d] * contexts[c_base + d]).sum();
        let g = if i == 0 { sigmoid(dot) - 1.0 } else { sigmoid(dot) };
        for d in 0..dim {
            word_update[d] += g * contexts[c_base + d];
            contexts[c_base + d] -= lr * g * words[w_base + d];
        }
    }
    for d in 0..dim {
        words[w_base + d] -= lr * word_update[d];
    }
}

fn train_sequential(
    table: &mut EmbeddingTable,
    indexed: &[(usize, usize)],
    sampler: &WeightedIndex<f64>,
    config: &SgnsConfig,
    rng: &mut ChaCha8Rng,
) {
    let total_steps = (config.epochs * indexed.len()) as f64;
    let mut order: Vec<usize> = (0..indexed.len()).collect();
    let mut step = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for &p in &order {
            let (word, context) = indexed[p];
            let lr = (config.learning_rate * (1.0 - step as f64 / total_steps))
                .max(config.min_learning_rate);
            // draws matching the positive context are skipped, as in the
            // reference negative-sampling loop
            let negatives: Vec<usize> = (0..config.negatives)
                .filter_map(|_| {
                    let draw = sampler.sample(rng);
                    (draw != context).then_some(draw)
                })
                .collect();
            sgd_step(
                &mut table.word_vectors,
                &mut table.context_vectors,
                table.dim,
                word,
                context,
                &negatives,
                lr,
            );
            step += 1;
        }
    }
}

fn train_parallel(
    table: &mut EmbeddingTable,
    indexed: &[(usize, usize)],
    sampler: &WeightedIndex<f64>,
    config: &SgnsConfig,
    rng: &mut ChaCha8Rng,
) {
    use rayon::prelude::*;

    let dim = table.dim;
    let words = RacyTable(UnsafeCell::new(std::mem::take(&mut table.word_vectors)));
    let contexts = RacyTable(UnsafeCell::new(std::mem::take(&mut table.context_vectors)));
    let total_steps = (config.epochs * indexed.len()) as f64;
    let chunk = (indexed.len() / rayon::current_num_threads().max(1)).max(1);

    for epoch in 0..config.epochs {
        let epoch_seed = rng.next_u64();
        let done = (epoch * indexed.len()) as f64;
        indexed
            .par_chunks(chunk)
            .enumerate()
            .for_each(|(chunk_index, part)| {
                let mut local = ChaCha8Rng::seed_from_u64(epoch_seed ^ chunk_index as u64);
                // racy hogwild-style updates on the shared tables
                let words = unsafe { words.get() };
                let contexts = unsafe { contexts.get() };
                for (offset, &(word, context)) in part.iter().enumerate() {
                    let step = done + (chunk_index * chunk + offset) as f64;
                    let lr = (config.learning_rate * (1.0 - step / total_steps))
                        .max(config.min_learning_rate);
                    let negatives: Vec<usize> = (0..config.negatives)
                        .filter_map(|_| {
                            let draw = sampler.sample(&mut local);
                            (draw != context).then_some(draw)
                        })
                        .collect();
                    sgd_step(words, contexts, dim, word, context, &negatives, lr);
                }
            });
    }
    table.word_vectors = words.0.into_inner();
    table.context_vectors = contexts.0.into_inner();
}
