//! Toolkit for dependency-syntax-based irony detection on Universal
//! Dependencies treebanks.
//!
//! The pipeline: parse CoNLL-U tweet corpora with binary irony labels
//! ([`conllu`], [`corpus`]), extract ten morpho-syntactic feature families
//! ([`features`]), turn them into sparse count vectors ([`vectorizer`]),
//! train and evaluate classical classifiers ([`learners`], [`evaluation`]),
//! search feature combinations exhaustively ([`evaluation::search_best_features`]),
//! and train dependency-context word embeddings ([`embeddings`]).

pub mod conllu;
pub mod corpus;
pub mod embeddings;
pub mod evaluation;
pub mod features;
pub mod learners;
pub mod synth;
pub mod vectorizer;
