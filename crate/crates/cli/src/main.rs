//! `depirony` command-line tool: validate and vectorize CoNLL-U corpora,
//! train and evaluate irony classifiers, search feature combinations,
//! train dependency-context embeddings, and report error distributions.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 training error.

mod commands;
mod config;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "depirony",
    version,
    about = "Dependency-syntax irony detection toolkit",
    max_term_width = 100
)]
struct Cli {
    /// Worker threads for search/forest parallelism
    /// (default: DEPIRONY_JOBS or all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct FeatureArgs {
    /// Comma-separated feature namespaces (or "all"): ngrams, chargrams,
    /// deprelneg, deprel, relformVERB, relformNOUN, relformADJ,
    /// sidorovform, sidorovupostag, sidorovdeprel.
    #[arg(long, default_value = "all")]
    features: String,

    /// Lowercase FORM values before building form-based features.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    lowercase_forms: bool,

    /// Record feature presence (0/1) instead of raw counts.
    #[arg(long)]
    binary: bool,

    /// Keep only features seen in at least this many training sentences.
    #[arg(long, default_value_t = 1)]
    min_df: usize,

    /// Negation-cue list (one lowercased form per line) replacing the
    /// built-in lexicon of --lang.
    #[arg(long)]
    negation_lexicon: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LabelArgs {
    /// Sidecar label TSV (sent_id<TAB>label); default: embedded
    /// `# irony` metadata.
    #[arg(long)]
    labels: Option<PathBuf>,

    /// Language tag (en/es/fr/it) selecting the negation-cue lexicon.
    #[arg(long, default_value = "en")]
    lang: String,

    /// Drop invalid sentences with a warning instead of aborting.
    #[arg(long)]
    lenient: bool,

    /// Check loaded counts against a split<TAB>class<TAB>count manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate CoNLL-U files, reporting sentence counts.
    Validate {
        /// CoNLL-U files to check.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        lenient: bool,
    },

    /// Extract features into an svmlight-style sparse matrix.
    Extract {
        /// Labeled CoNLL-U input files.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[command(flatten)]
        labels: LabelArgs,
        #[command(flatten)]
        features: FeatureArgs,
        /// Output matrix path.
        #[arg(long)]
        out: PathBuf,
        /// Write the vocabulary as index<TAB>namespace<TAB>key.
        #[arg(long)]
        vocab_out: Option<PathBuf>,
        /// Vectorize against an existing vocabulary instead of building
        /// one from the input.
        #[arg(long, conflicts_with = "vocab_out")]
        apply_vocab: Option<PathBuf>,
        /// Dump raw bags as namespace<TAB>key<TAB>count for inspection.
        #[arg(long)]
        dump_bags: Option<PathBuf>,
    },

    /// Train a classifier and save a model artifact.
    Train {
        /// Training CoNLL-U files.
        #[arg(long, required = true, num_args = 1..)]
        train: Vec<PathBuf>,
        #[command(flatten)]
        labels: LabelArgs,
        #[command(flatten)]
        features: FeatureArgs,
        /// Model kind: svm, logreg, rf, or mlp.
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Key=value hyper-parameter file (see README for keys).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output artifact path (JSON).
        #[arg(long)]
        out: PathBuf,
    },

    /// Evaluate a trained model (or the SVC+unigrams baseline) on a
    /// labeled test set.
    Eval {
        /// Model artifact produced by `train`.
        #[arg(long, required_unless_present = "baseline_unigrams")]
        model_file: Option<PathBuf>,
        /// Run the linear-SVM unigram baseline instead of a saved model
        /// (requires --train).
        #[arg(long)]
        baseline_unigrams: bool,
        /// Training files for the baseline.
        #[arg(long, num_args = 1.., required_if_eq("baseline_unigrams", "true"))]
        train: Vec<PathBuf>,
        /// Test CoNLL-U files.
        #[arg(long, required = true, num_args = 1..)]
        test: Vec<PathBuf>,
        #[command(flatten)]
        labels: LabelArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the metrics as TSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },

    /// Evaluate every (model, feature-subset) combination.
    Search {
        #[arg(long, required = true, num_args = 1..)]
        train: Vec<PathBuf>,
        /// Test files (required for --protocol paper).
        #[arg(long, num_args = 1..)]
        test: Vec<PathBuf>,
        #[command(flatten)]
        labels: LabelArgs,
        /// Comma-separated model kinds to search (default all four).
        #[arg(long, default_value = "svm,logreg,rf,mlp")]
        models: String,
        /// Cell scoring protocol: cv (k-fold on train) or paper
        /// (test-set selection).
        #[arg(long, default_value = "cv")]
        protocol: String,
        /// Shorthand for --protocol paper.
        #[arg(long, conflicts_with = "protocol")]
        paper_protocol: bool,
        /// Folds for the cv protocol.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        lowercase_forms: bool,
        #[arg(long)]
        binary: bool,
        /// Negation-cue list replacing the built-in per-language lexicon.
        #[arg(long)]
        negation_lexicon: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output table TSV.
        #[arg(long)]
        out: PathBuf,
    },

    /// Train dependency-context word embeddings from UD treebanks.
    Embed {
        /// CoNLL-U files or directories (searched recursively).
        #[arg(long, required = true, num_args = 1..)]
        treebanks: Vec<PathBuf>,
        #[arg(long, default_value_t = 300)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        negatives: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 2)]
        min_count: usize,
        #[arg(long, default_value_t = 0.025)]
        learning_rate: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        lowercase_forms: bool,
        /// Lock-free parallel updates (forfeits bit-reproducibility).
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        lenient: bool,
        /// Output vectors in the `vocab dim` + one-word-per-line format.
        #[arg(long)]
        out: PathBuf,
    },

    /// Report UPOS/deprel distribution shifts in misclassified tweets.
    AnalyzeErrors {
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        test: Vec<PathBuf>,
        #[command(flatten)]
        labels: LabelArgs,
        /// Output report TSV.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    // die quietly when a pipe closes (e.g. `depirony ... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version as "errors" with successful exit
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };

    let jobs = cli
        .jobs
        .or_else(|| {
            std::env::var("DEPIRONY_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if jobs > 0 {
        // a second build_global (e.g. in tests) is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }

    match commands::run(cli.command, jobs) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
