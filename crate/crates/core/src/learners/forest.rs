//! Random forest with gini-impurity splits on sparse count vectors.
//!
//! "Default parameters" are pinned explicitly here: 100 trees, gini
//! impurity, floor(sqrt(V)) candidate features per split, bootstrap
//! sampling with per-tree seeds derived from the master seed, no depth
//! limit, minimum leaf size 1. When none of the sampled candidate
//! features yields an impurity decrease, the split search falls back to
//! scanning all features before declaring a leaf.

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dataset, LearnError};
use crate::corpus::Label;
use crate::vectorizer::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeatures {
    /// floor(sqrt(V)), at least 1.
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    fn resolve(self, dim: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => (dim as f64).sqrt().floor() as usize,
            MaxFeatures::All => dim,
            MaxFeatures::Fixed(k) => k,
        }
        .clamp(1, dim.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub min_split: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            max_depth: None,
            min_leaf: 1,
            min_split: 2,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Class counts [not-ironic, ironic] of the training samples that
        /// reached this leaf.
        counts: [u32; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Majority vote at the reached leaf; ties go to the negative class.
    fn vote(&self, row: &SparseVector) -> Label {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row.get(*feature) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                Node::Leaf { counts } => {
                    return if counts[1] > counts[0] {
                        Label::Ironic
                    } else {
                        Label::NotIronic
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub dim: usize,
}

impl ForestModel {
    /// Fraction of trees voting ironic.
    pub fn score(&self, row: &SparseVector) -> f64 {
        let votes = self
            .trees
            .iter()
            .filter(|t| t.vote(row).is_ironic())
            .count();
        votes as f64 / self.trees.len().max(1) as f64
    }
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

struct SplitChoice {
    feature: u32,
    threshold: f64,
    weighted_gini: f64,
}

struct TreeBuilder<'a> {
    rows: &'a [SparseVector],
    labels: &'a [Label],
    dim: usize,
    config: &'a ForestConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn label_counts(&self, samples: &[u32]) -> [usize; 2] {
        let mut counts = [0usize; 2];
        for &s in samples {
            counts[self.labels[s as usize].as_u8() as usize] += 1;
        }
        counts
    }

    /// Best gini split for `samples` over `features` (assumed sorted
    /// ascending). Ties keep the first candidate, so the choice is
    /// deterministic: lowest feature, then lowest threshold.
    fn best_split(&self, samples: &[u32], features: &[u32], parent_gini: f64) -> Option<SplitChoice> {
        let n = samples.len() as f64;
        let total = self.label_counts(samples);
        let mut best: Option<SplitChoice> = None;
        let mut values: Vec<(f64, u8)> = Vec::with_capacity(samples.len());

        for &feature in features {
            values.clear();
            for &s in samples {
                values.push((
                    self.rows[s as usize].get(feature),
                    self.labels[s as usize].as_u8(),
                ));
            }
            values.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
            if values[0].0 == values[values.len() - 1].0 {
                continue; // constant within the node
            }
            let mut left = [0usize; 2];
            for window in 0..values.len() - 1 {
                left[values[window].1 as usize] += 1;
                let (value, next_value) = (values[window].0, values[window + 1].0);
                if value == next_value {
                    continue;
                }
                let n_left = window + 1;
                let n_right = samples.len() - n_left;
                if n_left < self.config.min_leaf || n_right < self.config.min_leaf {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let weighted =
                    (n_left as f64 * gini(left) + n_right as f64 * gini(right)) / n;
                let better = match &best {
                    Some(b) => weighted < b.weighted_gini,
                    None => true,
                };
                if better {
                    best = Some(SplitChoice {
                        feature,
                        threshold: (value + next_value) / 2.0,
                        weighted_gini: weighted,
                    });
                }
            }
        }
        best.filter(|b| b.weighted_gini < parent_gini - 1e-12)
    }

    fn grow(&mut self, samples: Vec<u32>, depth: usize) -> u32 {
        let counts = self.label_counts(&samples);
        let node_gini = gini(counts);
        let depth_capped = self
            .config
            .max_depth
            .is_some_and(|limit| depth >= limit);
        let as_leaf = |builder: &mut Self| {
            builder.nodes.push(Node::Leaf {
                counts: [counts[0] as u32, counts[1] as u32],
            });
            (builder.nodes.len() - 1) as u32
        };
        if node_gini == 0.0 || samples.len() < self.config.min_split || depth_capped || self.dim == 0
        {
            return as_leaf(self);
        }

        let k = self.config.max_features.resolve(self.dim);
        let mut candidates: Vec<u32> = sample(&mut self.rng, self.dim, k)
            .into_iter()
            .map(|i| i as u32)
            .collect();
        candidates.sort_unstable();
        let choice = self.best_split(&samples, &candidates, node_gini).or_else(|| {
            if k < self.dim {
                let all: Vec<u32> = (0..self.dim as u32).collect();
                self.best_split(&samples, &all, node_gini)
            } else {
                None
            }
        });
        let Some(choice) = choice else {
            return as_leaf(self);
        };

        let (left_samples, right_samples): (Vec<u32>, Vec<u32>) = samples
            .into_iter()
            .partition(|&s| self.rows[s as usize].get(choice.feature) <= choice.threshold);
        let index = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf { counts: [0, 0] }); // placeholder
        let left = self.grow(left_samples, depth + 1);
        let right = self.grow(right_samples, depth + 1);
        self.nodes[index as usize] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right,
        };
        index
    }
}

fn train_tree(
    rows: &[SparseVector],
    labels: &[Label],
    dim: usize,
    config: &ForestConfig,
    seed: u64,
) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rows.len();
    let samples: Vec<u32> = if config.bootstrap {
        (0..n).map(|_| rng.gen_range(0..n) as u32).collect()
    } else {
        (0..n as u32).collect()
    };
    let mut builder = TreeBuilder {
        rows,
        labels,
        dim,
        config,
        rng,
        nodes: Vec::new(),
    };
    builder.grow(samples, 0);
    Tree {
        nodes: builder.nodes,
    }
}

/// Train the forest. Per-tree seeds are drawn from a seeded generator up
/// front, so parallel tree construction is deterministic.
pub fn train_forest(
    rows: &[SparseVector],
    labels: &[Label],
    dim: usize,
    config: &ForestConfig,
) -> Result<ForestModel, LearnError> {
    check_dataset(rows, labels, dim)?;
    let mut seeder = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds: Vec<u64> = (0..config.n_trees).map(|_| seeder.next_u64()).collect();
    let trees: Vec<Tree> = seeds
        .par_iter()
        .map(|&seed| train_tree(rows, labels, dim, config, seed))
        .collect();
    Ok(ForestModel { trees, dim })
}
