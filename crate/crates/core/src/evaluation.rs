//! Macro-F1 evaluation, the exhaustive feature-combination search, the
//! SVC+unigrams baseline, and the morpho-syntactic error-analysis report.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::conllu::Sentence;
use crate::corpus::{CorpusItem, Label, LabeledCorpus, Split};
use crate::features::{Extractor, FeatureBag, FeatureSpec, Namespace, NegationLexicon};
use crate::learners::{
    predict_labels, train_forest, train_logreg, train_mlp, train_svm, ForestConfig, LearnError,
    LogRegConfig, MlpConfig, Model, ModelKind, SvmConfig,
};
use crate::vectorizer::{vectorize, SparseVector, VectorizeError, Vocabulary};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction and gold label sequences differ in length ({pred} vs {gold})")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("cannot evaluate an empty label sequence")]
    Empty,
    #[error("corpus has an empty {0} split")]
    EmptySplit(Split),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// Confusion matrix and per-class scores with ironic as the positive
/// class. A class with zero precision+recall gets F1 = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision_ironic: f64,
    pub recall_ironic: f64,
    pub f1_ironic: f64,
    pub precision_not: f64,
    pub recall_not: f64,
    pub f1_not: f64,
    /// `(f1_ironic + f1_not) / 2`.
    pub macro_f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Compare predictions against gold labels.
pub fn evaluate(pred: &[Label], gold: &[Label]) -> Result<EvalReport, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    let mut tn = 0;
    for (p, g) in pred.iter().zip(gold) {
        match (p.is_ironic(), g.is_ironic()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision_ironic = ratio(tp, tp + fp);
    let recall_ironic = ratio(tp, tp + fn_);
    let f1_ironic = f1(precision_ironic, recall_ironic);
    let precision_not = ratio(tn, tn + fn_);
    let recall_not = ratio(tn, tn + fp);
    let f1_not = f1(precision_not, recall_not);
    Ok(EvalReport {
        tp,
        fp,
        fn_,
        tn,
        precision_ironic,
        recall_ironic,
        f1_ironic,
        precision_not,
        recall_not,
        f1_not,
        macro_f1: (f1_ironic + f1_not) / 2.0,
    })
}

impl EvalReport {
    pub fn to_tsv(&self) -> String {
        format!(
            "metric\tvalue\n\
             tp\t{}\nfp\t{}\nfn\t{}\ntn\t{}\n\
             precision_ironic\t{:.6}\nrecall_ironic\t{:.6}\nf1_ironic\t{:.6}\n\
             precision_not\t{:.6}\nrecall_not\t{:.6}\nf1_not\t{:.6}\n\
             macro_f1\t{:.6}\n",
            self.tp,
            self.fp,
            self.fn_,
            self.tn,
            self.precision_ironic,
            self.recall_ironic,
            self.f1_ironic,
            self.precision_not,
            self.recall_not,
            self.f1_not,
            self.macro_f1,
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "confusion: tp={} fp={} fn={} tn={}",
            self.tp, self.fp, self.fn_, self.tn
        )?;
        writeln!(
            f,
            "ironic:     P={:.4} R={:.4} F1={:.4}",
            self.precision_ironic, self.recall_ironic, self.f1_ironic
        )?;
        writeln!(
            f,
            "not-ironic: P={:.4} R={:.4} F1={:.4}",
            self.precision_not, self.recall_not, self.f1_not
        )?;
        write!(f, "macro-F1:   {:.4}", self.macro_f1)
    }
}

/// How a (model, feature-subset) cell is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Train on the train split, select on the test split (comparable to
    /// the reported best runs, but the selection leaks the test set).
    Paper,
    /// k-fold cross-validation on the train split only.
    CrossVal { folds: usize },
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol::CrossVal { folds: 5 }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Paper => write!(f, "paper"),
            Protocol::CrossVal { folds } => write!(f, "cv{folds}"),
        }
    }
}

/// Hyper-parameters per model kind, shared by every search cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelConfigs {
    pub svm: SvmConfig,
    pub logreg: LogRegConfig,
    pub forest: ForestConfig,
    pub mlp: MlpConfig,
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub models: Vec<ModelKind>,
    /// Namespaces the subset enumeration ranges over; k namespaces give
    /// 2^k - 1 subsets per model (all ten by default).
    pub namespaces: Vec<Namespace>,
    pub protocol: Protocol,
    pub lowercase_forms: bool,
    pub binary_counts: bool,
    /// Master seed; it overrides the per-model config seeds so one value
    /// pins the whole search.
    pub seed: u64,
    pub configs: ModelConfigs,
    /// Negation lexicon override; by default each item uses the built-in
    /// lexicon for its language tag.
    pub negation_override: Option<NegationLexicon>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            models: ModelKind::ALL.to_vec(),
            namespaces: Namespace::ALL.to_vec(),
            protocol: Protocol::default(),
            lowercase_forms: true,
            binary_counts: false,
            seed: 42,
            configs: ModelConfigs::default(),
            negation_override: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellScore {
    pub macro_f1: f64,
    pub f1_ironic: f64,
    pub f1_not: f64,
}

/// One (model, subset) entry of the search table.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchCell {
    pub model: ModelKind,
    pub mask: u16,
    pub namespaces: String,
    pub seed: u64,
    pub result: Result<CellScore, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub cells: Vec<SearchCell>,
    pub protocol: Protocol,
}

impl SearchOutcome {
    /// Best-scoring cell; deterministic (the first cell in table order
    /// wins ties).
    pub fn argmax(&self) -> Option<&SearchCell> {
        let mut best: Option<(&SearchCell, f64)> = None;
        for cell in &self.cells {
            if let Ok(score) = &cell.result {
                if best.is_none_or(|(_, b)| score.macro_f1 > b) {
                    best = Some((cell, score.macro_f1));
                }
            }
        }
        best.map(|(cell, _)| cell)
    }

    /// `model  subset_bitmask  namespaces  macro_f1  f1_ironic  f1_not
    /// seed  error` rows.
    pub fn to_tsv(&self) -> String {
        let mut out =
            String::from("model\tsubset_bitmask\tnamespaces\tmacro_f1\tf1_ironic\tf1_not\tseed\terror\n");
        for cell in &self.cells {
            match &cell.result {
                Ok(score) => writeln!(
                    out,
                    "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t",
                    cell.model,
                    cell.mask,
                    cell.namespaces,
                    score.macro_f1,
                    score.f1_ironic,
                    score.f1_not,
                    cell.seed
                ),
                Err(message) => writeln!(
                    out,
                    "{}\t{}\t{}\tNA\tNA\tNA\t{}\t{}",
                    cell.model, cell.mask, cell.namespaces, cell.seed, message
                ),
            }
            .expect("write to String");
        }
        out
    }
}

fn train_model(
    kind: ModelKind,
    rows: &[SparseVector],
    labels: &[Label],
    dim: usize,
    configs: &ModelConfigs,
    seed: u64,
) -> Result<Model, LearnError> {
    match kind {
        ModelKind::Svm => {
            let config = SvmConfig { seed, ..configs.svm.clone() };
            Ok(Model::Linear(train_svm(rows, labels, dim, &config)?))
        }
        ModelKind::Logreg => {
            let config = LogRegConfig { seed, ..configs.logreg.clone() };
            Ok(Model::Linear(train_logreg(rows, labels, dim, &config)?))
        }
        ModelKind::Rf => {
            let config = ForestConfig { seed, ..configs.forest.clone() };
            Ok(Model::Forest(train_forest(rows, labels, dim, &config)?))
        }
        ModelKind::Mlp => {
            let config = MlpConfig { seed, ..configs.mlp.clone() };
            Ok(Model::Mlp(train_mlp(rows, labels, dim, &config)?))
        }
    }
}

/// Train on `train`, score on `eval`: the basic cell evaluation.
fn holdout_score(
    kind: ModelKind,
    train_bags: &[&FeatureBag],
    train_labels: &[Label],
    eval_bags: &[&FeatureBag],
    eval_labels: &[Label],
    spec: &FeatureSpec,
    search: &SearchConfig,
) -> Result<CellScore, EvalError> {
    let vocab = Vocabulary::build(train_bags.iter().copied(), spec)?;
    let to_rows = |bags: &[&FeatureBag]| -> Result<Vec<SparseVector>, VectorizeError> {
        bags.iter()
            .map(|bag| vectorize(bag, &vocab, spec, search.binary_counts))
            .collect()
    };
    let train_rows = to_rows(train_bags)?;
    let eval_rows = to_rows(eval_bags)?;
    let model = train_model(
        kind,
        &train_rows,
        train_labels,
        vocab.len(),
        &search.configs,
        search.seed,
    )?;
    let pred = predict_labels(&model, &eval_rows)?;
    let report = evaluate(&pred, eval_labels)?;
    Ok(CellScore {
        macro_f1: report.macro_f1,
        f1_ironic: report.f1_ironic,
        f1_not: report.f1_not,
    })
}

/// Stratified fold ids for the train items (seeded shuffle per class,
/// round-robin assignment).
fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    for class in [Label::Ironic, Label::NotIronic] {
        let mut indices: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == class)
            .map(|(i, _)| i)
            .collect();
        indices.shuffle(&mut rng);
        for (position, index) in indices.into_iter().enumerate() {
            assignment[index] = position % folds;
        }
    }
    assignment
}

/// Extract the full bag of every item once (over all searched
/// namespaces); cells then filter by namespace subset.
fn extract_all_bags(items: &[&CorpusItem], config: &SearchConfig) -> Vec<FeatureBag> {
    let spec = FeatureSpec {
        lowercase_forms: config.lowercase_forms,
        enabled: config.namespaces.iter().copied().collect(),
    };
    items
        .par_iter()
        .map(|item| {
            let lexicon = config
                .negation_override
                .clone()
                .unwrap_or_else(|| NegationLexicon::builtin(&item.language));
            Extractor::new(spec.clone(), lexicon).extract(&item.sentence)
        })
        .collect()
}

/// Evaluate every (model, non-empty namespace subset) pair: 1023 subsets
/// per model over the ten namespaces (2^k - 1 when `namespaces` is
/// restricted to k). Trainer failures are recorded in the cell rather
/// than aborting the search.
pub fn search_best_features(
    corpus: &LabeledCorpus,
    config: &SearchConfig,
) -> Result<SearchOutcome, EvalError> {
    let train_items: Vec<&CorpusItem> = corpus.train().collect();
    if train_items.is_empty() {
        return Err(EvalError::EmptySplit(Split::Train));
    }
    let train_labels: Vec<Label> = train_items.iter().map(|i| i.label).collect();
    let train_bags = extract_all_bags(&train_items, config);

    let (test_bags, test_labels) = match config.protocol {
        Protocol::Paper => {
            let test_items: Vec<&CorpusItem> = corpus.test().collect();
            if test_items.is_empty() {
                return Err(EvalError::EmptySplit(Split::Test));
            }
            let labels: Vec<Label> = test_items.iter().map(|i| i.label).collect();
            (extract_all_bags(&test_items, config), labels)
        }
        Protocol::CrossVal { .. } => (Vec::new(), Vec::new()),
    };
    let fold_of = match config.protocol {
        Protocol::CrossVal { folds } => stratified_folds(&train_labels, folds, config.seed),
        Protocol::Paper => Vec::new(),
    };

    // binary-counting subset masks over the searched namespace list; for
    // the full canonical list this is the canonical subset bitmask
    let subsets = crate::vectorizer::enumerate_subsets(&config.namespaces, config.lowercase_forms);
    let jobs: Vec<(ModelKind, u16, &FeatureSpec)> = config
        .models
        .iter()
        .flat_map(|kind| {
            subsets
                .iter()
                .enumerate()
                .map(move |(i, spec)| (*kind, (i + 1) as u16, spec))
        })
        .collect();

    let cells: Vec<SearchCell> = jobs
        .par_iter()
        .map(|&(kind, mask, spec)| {
            let namespaces = spec.names();
            let result = match config.protocol {
                Protocol::Paper => holdout_score(
                    kind,
                    &train_bags.iter().collect::<Vec<_>>(),
                    &train_labels,
                    &test_bags.iter().collect::<Vec<_>>(),
                    &test_labels,
                    spec,
                    config,
                )
                .map_err(|e| e.to_string()),
                Protocol::CrossVal { folds } => cross_val_score(
                    kind,
                    folds,
                    &fold_of,
                    &train_bags,
                    &train_labels,
                    spec,
                    config,
                )
                .map_err(|e| e.to_string()),
            };
            SearchCell {
                model: kind,
                mask,
                namespaces,
                seed: config.seed,
                result,
            }
        })
        .collect();

    Ok(SearchOutcome {
        cells,
        protocol: config.protocol,
    })
}

fn cross_val_score(
    kind: ModelKind,
    folds: usize,
    fold_of: &[usize],
    bags: &[FeatureBag],
    labels: &[Label],
    spec: &FeatureSpec,
    config: &SearchConfig,
) -> Result<CellScore, EvalError> {
    let mut scores = Vec::new();
    for fold in 0..folds {
        let mut train_bags = Vec::new();
        let mut train_labels = Vec::new();
        let mut eval_bags = Vec::new();
        let mut eval_labels = Vec::new();
        for (i, bag) in bags.iter().enumerate() {
            if fold_of[i] == fold {
                eval_bags.push(bag);
                eval_labels.push(labels[i]);
            } else {
                train_bags.push(bag);
                train_labels.push(labels[i]);
            }
        }
        if eval_bags.is_empty() || train_bags.is_empty() {
            continue;
        }
        scores.push(holdout_score(
            kind,
            &train_bags,
            &train_labels,
            &eval_bags,
            &eval_labels,
            spec,
            config,
        )?);
    }
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = scores.len() as f64;
    Ok(CellScore {
        macro_f1: scores.iter().map(|s| s.macro_f1).sum::<f64>() / n,
        f1_ironic: scores.iter().map(|s| s.f1_ironic).sum::<f64>() / n,
        f1_not: scores.iter().map(|s| s.f1_not).sum::<f64>() / n,
    })
}

/// Linear SVM over the token-unigram bag only: the baseline reference
/// measure.
pub fn run_baseline_svc_unigrams(
    corpus: &LabeledCorpus,
    config: &SearchConfig,
) -> Result<EvalReport, EvalError> {
    let spec = FeatureSpec {
        enabled: [Namespace::Ngrams].into_iter().collect(),
        lowercase_forms: config.lowercase_forms,
    };
    let unigram_bags = |items: &[&CorpusItem]| -> Vec<FeatureBag> {
        items
            .iter()
            .map(|item| {
                crate::features::extract_token_unigrams(&item.sentence, spec.lowercase_forms)
            })
            .collect()
    };
    let train_items: Vec<&CorpusItem> = corpus.train().collect();
    let test_items: Vec<&CorpusItem> = corpus.test().collect();
    if train_items.is_empty() {
        return Err(EvalError::EmptySplit(Split::Train));
    }
    if test_items.is_empty() {
        return Err(EvalError::EmptySplit(Split::Test));
    }
    let train_bags = unigram_bags(&train_items);
    let test_bags = unigram_bags(&test_items);
    let train_labels: Vec<Label> = train_items.iter().map(|i| i.label).collect();
    let test_labels: Vec<Label> = test_items.iter().map(|i| i.label).collect();

    let vocab = Vocabulary::build(train_bags.iter(), &spec)?;
    let train_rows: Vec<SparseVector> = train_bags
        .iter()
        .map(|b| vectorize(b, &vocab, &spec, config.binary_counts))
        .collect::<Result<_, _>>()?;
    let test_rows: Vec<SparseVector> = test_bags
        .iter()
        .map(|b| vectorize(b, &vocab, &spec, config.binary_counts))
        .collect::<Result<_, _>>()?;
    let svm_config = SvmConfig {
        seed: config.seed,
        ..config.configs.svm.clone()
    };
    let model = Model::Linear(train_svm(&train_rows, &train_labels, vocab.len(), &svm_config)?);
    let pred = predict_labels(&model, &test_rows)?;
    evaluate(&pred, &test_labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TagKind {
    Upos,
    Deprel,
}

impl fmt::Display for TagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagKind::Upos => write!(f, "upos"),
            TagKind::Deprel => write!(f, "deprel"),
        }
    }
}

/// Categories typical of user-generated text and known to be hard for
/// UD parsers; the report flags them for quick scanning.
pub const WATCHLIST_UPOS: [&str; 2] = ["SYM", "X"];
pub const WATCHLIST_DEPREL: [&str; 3] = ["parataxis", "flat", "expl"];

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorAnalysisRow {
    pub kind: TagKind,
    pub tag: String,
    /// Relative frequency over all test tokens.
    pub freq_all: f64,
    /// Relative frequency over tokens of misclassified tweets.
    pub freq_misclassified: f64,
    /// Percentage delta `(freq_mis / freq_all - 1) * 100`; `None` when
    /// there are no misclassified tweets.
    pub delta_pct: Option<f64>,
    pub watchlist: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorAnalysisReport {
    pub rows: Vec<ErrorAnalysisRow>,
    pub total_tweets: usize,
    pub misclassified_tweets: usize,
    pub total_tokens: usize,
    pub misclassified_tokens: usize,
}

impl ErrorAnalysisReport {
    pub fn upos_rows(&self) -> impl Iterator<Item = &ErrorAnalysisRow> {
        self.rows.iter().filter(|r| r.kind == TagKind::Upos)
    }

    pub fn deprel_rows(&self) -> impl Iterator<Item = &ErrorAnalysisRow> {
        self.rows.iter().filter(|r| r.kind == TagKind::Deprel)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("kind\ttag\tfreq_all\tfreq_misclassified\tdelta_pct\twatchlist\n");
        for row in &self.rows {
            let delta = row
                .delta_pct
                .map(|d| format!("{d:+.2}"))
                .unwrap_or_else(|| "NA".to_string());
            writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}\t{}\t{}",
                row.kind, row.tag, row.freq_all, row.freq_misclassified, delta, row.watchlist
            )
            .expect("write to String");
        }
        out
    }
}

impl fmt::Display for ErrorAnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "misclassified {} of {} tweets ({} of {} tokens)",
            self.misclassified_tweets, self.total_tweets, self.misclassified_tokens,
            self.total_tokens
        )?;
        for row in &self.rows {
            let delta = row
                .delta_pct
                .map(|d| format!("{d:+.1}%"))
                .unwrap_or_else(|| "NA".to_string());
            let flag = if row.watchlist { "  [watchlist]" } else { "" };
            writeln!(
                f,
                "{:>6} {:<14} all={:.4} mis={:.4} delta={}{}",
                row.kind.to_string(),
                row.tag,
                row.freq_all,
                row.freq_misclassified,
                delta,
                flag
            )?;
        }
        Ok(())
    }
}

/// Token-level UPOS/deprel distribution over the whole test set vs over
/// the misclassified tweets, with the percentage delta per tag. A
/// misclassified tweet contributes all of its tokens.
pub fn error_distribution_report(
    sentences: &[&Sentence],
    gold: &[Label],
    pred: &[Label],
) -> Result<ErrorAnalysisReport, EvalError> {
    if sentences.len() != gold.len() || gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if sentences.is_empty() {
        return Err(EvalError::Empty);
    }

    let mut all_counts: BTreeMap<(TagKind, String), usize> = BTreeMap::new();
    let mut mis_counts: BTreeMap<(TagKind, String), usize> = BTreeMap::new();
    let mut total_tokens = 0usize;
    let mut mis_tokens = 0usize;
    let mut mis_tweets = 0usize;

    for ((sentence, g), p) in sentences.iter().zip(gold).zip(pred) {
        let misclassified = g != p;
        if misclassified {
            mis_tweets += 1;
        }
        for token in &sentence.tokens {
            total_tokens += 1;
            let tags = [
                (TagKind::Upos, token.upos.clone()),
                (TagKind::Deprel, token.deprel.clone()),
            ];
            for tag in tags {
                *all_counts.entry(tag.clone()).or_insert(0) += 1;
                if misclassified {
                    *mis_counts.entry(tag).or_insert(0) += 1;
                }
            }
            if misclassified {
                mis_tokens += 1;
            }
        }
    }

    let has_misclassified = mis_tweets > 0 && mis_tokens > 0;
    let mut rows: Vec<ErrorAnalysisRow> = all_counts
        .iter()
        .map(|((kind, tag), &count_all)| {
            let freq_all = count_all as f64 / total_tokens as f64;
            let count_mis = mis_counts.get(&(*kind, tag.clone())).copied().unwrap_or(0);
            let freq_mis = if has_misclassified {
                count_mis as f64 / mis_tokens as f64
            } else {
                0.0
            };
            let delta_pct = has_misclassified.then(|| (freq_mis / freq_all - 1.0) * 100.0);
            let watchlist = match kind {
                TagKind::Upos => WATCHLIST_UPOS.contains(&tag.as_str()),
                TagKind::Deprel => WATCHLIST_DEPREL.contains(&tag.as_str()),
            };
            ErrorAnalysisRow {
                kind: *kind,
                tag: tag.clone(),
                freq_all,
                freq_misclassified: freq_mis,
                delta_pct,
                watchlist,
            }
        })
        .collect();

    // within each kind: delta descending, ties by tag name
    rows.sort_by(|a, b| {
        a.kind.cmp(&b.kind).then_with(|| {
            match (a.delta_pct, b.delta_pct) {
                (Some(da), Some(db)) => db.partial_cmp(&da).expect("finite delta"),
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            }
            .then_with(|| a.tag.cmp(&b.tag))
        })
    });

    Ok(ErrorAnalysisReport {
        rows,
        total_tweets: sentences.len(),
        misclassified_tweets: mis_tweets,
        total_tokens,
        misclassified_tokens: mis_tokens,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::parse_conllu;

    fn labels(bits: &[u8]) -> Vec<Label> {
        bits.iter().map(|b| Label::from_int(*b as i64).unwrap()).collect()
    }

    #[test]
    fn perfect_prediction_is_macro_one() {
        let gold = labels(&[1, 0, 1, 0, 1]);
        let report = evaluate(&gold, &gold).unwrap();
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.f1_ironic, 1.0);
        assert_eq!(report.f1_not, 1.0);
    }

    #[test]
    fn all_negative_prediction_macro_third() {
        // gold [1,1,0,0], pred all 0: F1_ironic = 0,
        // F1_not = 2*(0.5*1.0)/(0.5+1.0) = 2/3, macro = 1/3
        let gold = labels(&[1, 1, 0, 0]);
        let pred = labels(&[0, 0, 0, 0]);
        let report = evaluate(&pred, &gold).unwrap();
        assert_eq!(report.f1_ironic, 0.0);
        assert_eq!(report.f1_not, 2.0 * (0.5 * 1.0) / (0.5 + 1.0));
        assert_eq!(report.macro_f1, (2.0 / 3.0) / 2.0);
    }

    #[test]
    fn fully_crossed_prediction_macro_zero() {
        let gold = labels(&[1, 0]);
        let pred = labels(&[0, 1]);
        let report = evaluate(&pred, &gold).unwrap();
        assert_eq!(report.macro_f1, 0.0);
    }

    #[test]
    fn macro_f1_is_symmetric_under_label_swap() {
        let gold = labels(&[1, 1, 0, 1, 0, 0, 1, 0]);
        let pred = labels(&[1, 0, 0, 1, 1, 0, 0, 0]);
        let report = evaluate(&pred, &gold).unwrap();
        let swap = |ls: &[Label]| -> Vec<Label> {
            ls.iter()
                .map(|l| if l.is_ironic() { Label::NotIronic } else { Label::Ironic })
                .collect()
        };
        let swapped = evaluate(&swap(&pred), &swap(&gold)).unwrap();
        assert_eq!(report.macro_f1, swapped.macro_f1);
        assert_eq!(report.f1_ironic, swapped.f1_not);
        assert_eq!(report.f1_not, swapped.f1_ironic);
    }

    #[test]
    fn eval_errors() {
        assert!(matches!(
            evaluate(&labels(&[1]), &labels(&[1, 0])),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(evaluate(&[], &[]), Err(EvalError::Empty)));
    }

    #[test]
    fn stratified_folds_cover_all_items() {
        let y = labels(&[1, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
        let folds = stratified_folds(&y, 5, 7);
        assert_eq!(folds.len(), 10);
        for fold in 0..5 {
            let members: Vec<usize> = (0..10).filter(|i| folds[*i] == fold).collect();
            assert_eq!(members.len(), 2); // one per class
            let classes: Vec<u8> = members.iter().map(|&i| y[i].as_u8()).collect();
            assert!(classes.contains(&0) && classes.contains(&1));
        }
    }

    fn toy_sentence(upos_tags: &[&str]) -> Sentence {
        let rows: Vec<String> = upos_tags
            .iter()
            .enumerate()
            .map(|(i, upos)| {
                let (head, deprel) = if i == 0 { (0, "root") } else { (1, "dep") };
                format!(
                    "{}\tw{}\tw{}\t{}\t_\t_\t{}\t{}\t_\t_",
                    i + 1,
                    i,
                    i,
                    upos,
                    head,
                    deprel
                )
            })
            .collect();
        parse_conllu(&(rows.join("\n") + "\n")).unwrap().remove(0)
    }

    #[test]
    fn perfect_predictions_have_na_deltas() {
        let s = toy_sentence(&["VERB", "NOUN"]);
        let gold = labels(&[1]);
        let report = error_distribution_report(&[&s], &gold, &gold).unwrap();
        assert_eq!(report.misclassified_tweets, 0);
        assert!(report.rows.iter().all(|r| r.delta_pct.is_none()));
        assert!(report.to_tsv().contains("NA"));
    }

    #[test]
    fn lone_sym_in_misclassified_tweet_ranks_first() {
        // the misclassified tweet holds the corpus's only SYM token;
        // every other tag also occurs in correctly classified tweets
        let mis = toy_sentence(&["VERB", "SYM", "NOUN"]);
        let ok1 = toy_sentence(&["VERB", "NOUN", "ADJ"]);
        let ok2 = toy_sentence(&["VERB", "NOUN", "ADJ", "ADV"]);
        let gold = labels(&[1, 0, 0]);
        let pred = labels(&[0, 0, 0]);
        let report =
            error_distribution_report(&[&mis, &ok1, &ok2], &gold, &pred).unwrap();
        let first_upos = report.upos_rows().next().unwrap();
        assert_eq!(first_upos.tag, "SYM");
        assert!(first_upos.watchlist);
        assert!(first_upos.delta_pct.unwrap() > 0.0);
        let sym_delta = first_upos.delta_pct.unwrap();
        for row in report.upos_rows().skip(1) {
            assert!(row.delta_pct.unwrap() <= sym_delta);
        }
    }

    #[test]
    fn restricted_search_enumerates_seven_subsets() {
        // enough held-out items that no noise namespace ties the planted
        // signal's perfect score
        let corpus = crate::synth::planted_corpus(&crate::synth::PlantedConfig {
            items: 60,
            test_fraction: 0.4,
            seed: 8,
            ..Default::default()
        });
        let config = SearchConfig {
            models: vec![ModelKind::Svm],
            namespaces: vec![
                Namespace::Ngrams,
                Namespace::Chargrams,
                Namespace::SidorovDeprel,
            ],
            protocol: Protocol::Paper,
            configs: ModelConfigs {
                svm: SvmConfig { max_epochs: 30, ..SvmConfig::default() },
                ..ModelConfigs::default()
            },
            ..SearchConfig::default()
        };
        let outcome = search_best_features(&corpus, &config).unwrap();
        assert_eq!(outcome.cells.len(), 7);
        assert_eq!(outcome.cells[0].namespaces, "ngrams");
        assert_eq!(outcome.cells[6].namespaces, "ngrams,chargrams,sidorovdeprel");
        // the signal lives in sidorovdeprel, so the argmax must use it
        let best = outcome.argmax().unwrap();
        assert!(best.namespaces.contains("sidorovdeprel"));
    }

    #[test]
    fn baseline_learns_a_planted_unigram_signal() {
        let corpus = crate::synth::lexical_corpus(&crate::synth::PlantedConfig {
            items: 200,
            seed: 15,
            ..Default::default()
        });
        let report = run_baseline_svc_unigrams(&corpus, &SearchConfig::default()).unwrap();
        assert!(
            report.macro_f1 >= 0.95,
            "unigram baseline macro-F1 {:.3}",
            report.macro_f1
        );
    }

    #[test]
    fn watchlist_flags_deprels() {
        let text = "1\ta\ta\tVERB\t_\t_\t0\troot\t_\t_\n2\tb\tb\tNOUN\t_\t_\t1\tparataxis\t_\t_\n";
        let s = parse_conllu(text).unwrap().remove(0);
        let report =
            error_distribution_report(&[&s], &labels(&[1]), &labels(&[0])).unwrap();
        let parataxis = report
            .deprel_rows()
            .find(|r| r.tag == "parataxis")
            .unwrap();
        assert!(parataxis.watchlist);
    }
}
