//! End-to-end tests driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use depirony::conllu::serialize_conllu;
use depirony::corpus::Split;
use depirony::synth::{planted_corpus, PlantedConfig};

const ENGLISH_TWEET: &str = include_str!("../../core/tests/fixtures/english_tweet.conllu");

fn depirony(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depirony"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

/// Write the planted corpus as train/test CoNLL-U files.
fn write_corpus(dir: &Path, items: usize, seed: u64) -> (PathBuf, PathBuf) {
    let corpus = planted_corpus(&PlantedConfig {
        items,
        seed,
        ..PlantedConfig::default()
    });
    let split = |which: Split| -> String {
        let sentences: Vec<_> = corpus
            .items
            .iter()
            .filter(|i| i.split == which)
            .map(|i| i.sentence.clone())
            .collect();
        serialize_conllu(&sentences)
    };
    let train = dir.join("train.conllu");
    let test = dir.join("test.conllu");
    std::fs::write(&train, split(Split::Train)).unwrap();
    std::fs::write(&test, split(Split::Test)).unwrap();
    (train, test)
}

#[test]
fn validate_reports_counts_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tweet.conllu");
    std::fs::write(&path, ENGLISH_TWEET).unwrap();
    let out = depirony(&["validate", "--input", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{out:?}");
    assert!(stdout(&out).contains("1 sentences"));
    assert!(stdout(&out).contains("valid sentences: 1"));
}

#[test]
fn validate_rejects_malformed_with_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conllu");
    std::fs::write(&path, "1\tbroken\n").unwrap();
    let out = depirony(&["validate", "--input", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    // lenient mode drops it instead
    let out = depirony(&["validate", "--lenient", "--input", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("(1 dropped)"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = depirony(&["validate", "--no-such-flag"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn missing_input_is_a_data_error() {
    let out = depirony(&["validate", "--input", "/nonexistent/x.conllu"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn extract_writes_matrix_vocab_and_bags() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tweet.conllu");
    std::fs::write(&input, ENGLISH_TWEET).unwrap();
    let matrix = dir.path().join("out.svml");
    let vocab = dir.path().join("vocab.tsv");
    let bags = dir.path().join("bags.tsv");
    let out = depirony(&[
        "extract",
        "--input",
        input.to_str().unwrap(),
        "--features",
        "ngrams,sidorovform",
        "--out",
        matrix.to_str().unwrap(),
        "--vocab-out",
        vocab.to_str().unwrap(),
        "--dump-bags",
        bags.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let matrix_text = std::fs::read_to_string(&matrix).unwrap();
    assert!(matrix_text.contains("# command = extract"));
    let (labels, rows) = depirony::vectorizer::parse_svmlight(&matrix_text).unwrap();
    assert_eq!(labels.len(), 1);
    assert!(labels[0].is_ironic());
    // 36 n-gram tokens + 12 edges land in the single row
    assert_eq!(rows[0].l1_norm(), 48.0);

    let vocab_text = std::fs::read_to_string(&vocab).unwrap();
    let parsed = depirony::vectorizer::Vocabulary::parse_tsv(&vocab_text).unwrap();
    assert_eq!(parsed.len(), rows[0].nnz());

    let bags_text = std::fs::read_to_string(&bags).unwrap();
    assert!(bags_text.contains("# sent_id = en-tweet-1"));
    assert!(bags_text.contains("ngrams\tif you\t1"));
    assert!(bags_text.contains("sidorovform\tblind reading\t1"));
}

#[test]
fn extract_apply_vocab_reuses_train_indices() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = write_corpus(dir.path(), 30, 5);
    let train_matrix = dir.path().join("train.svml");
    let vocab = dir.path().join("vocab.tsv");
    let run = depirony(&[
        "extract",
        "--input",
        train.to_str().unwrap(),
        "--features",
        "sidorovdeprel",
        "--out",
        train_matrix.to_str().unwrap(),
        "--vocab-out",
        vocab.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0);

    let test_matrix = dir.path().join("test.svml");
    let run = depirony(&[
        "extract",
        "--input",
        test.to_str().unwrap(),
        "--features",
        "sidorovdeprel",
        "--apply-vocab",
        vocab.to_str().unwrap(),
        "--out",
        test_matrix.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let (_, train_rows) =
        depirony::vectorizer::parse_svmlight(&std::fs::read_to_string(&train_matrix).unwrap())
            .unwrap();
    let (_, test_rows) =
        depirony::vectorizer::parse_svmlight(&std::fs::read_to_string(&test_matrix).unwrap())
            .unwrap();
    let max_train = train_rows.iter().filter_map(|r| r.max_index()).max().unwrap();
    let max_test = test_rows.iter().filter_map(|r| r.max_index()).max().unwrap();
    assert!(max_test <= max_train, "test indices must live in the train vocabulary");
}

#[test]
fn train_is_byte_deterministic_and_eval_closes_the_loop() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = write_corpus(dir.path(), 60, 9);
    let model_a = dir.path().join("a.model.json");
    let model_b = dir.path().join("b.model.json");
    for model in [&model_a, &model_b] {
        let out = depirony(&[
            "train",
            "--train",
            train.to_str().unwrap(),
            "--features",
            "sidorovdeprel",
            "--model",
            "logreg",
            "--seed",
            "7",
            "--out",
            model.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let bytes_a = std::fs::read(&model_a).unwrap();
    let bytes_b = std::fs::read(&model_b).unwrap();
    assert_eq!(bytes_a, bytes_b, "same config + seed must be byte-identical");

    let report = dir.path().join("eval.tsv");
    let out = depirony(&[
        "eval",
        "--model-file",
        model_a.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("macro-F1"), "{text}");
    // the planted signal is learnable, so the report shows a high score
    let report_text = std::fs::read_to_string(&report).unwrap();
    let macro_line = report_text
        .lines()
        .find(|l| l.starts_with("macro_f1"))
        .unwrap();
    let value: f64 = macro_line.split('\t').nth(1).unwrap().parse().unwrap();
    assert!(value >= 0.95, "planted signal should be learned, got {value}");
}

#[test]
fn train_mlp_on_tiny_corpus_is_a_training_error() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = write_corpus(dir.path(), 8, 3);
    let out = depirony(&[
        "train",
        "--train",
        train.to_str().unwrap(),
        "--model",
        "mlp",
        "--out",
        dir.path().join("m.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_baseline_unigrams_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = write_corpus(dir.path(), 40, 13);
    let out = depirony(&[
        "eval",
        "--baseline-unigrams",
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("macro-F1"));
}

#[test]
fn search_emits_full_table_and_argmax() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = write_corpus(dir.path(), 30, 17);
    let config = dir.path().join("caps.conf");
    std::fs::write(&config, "svm.max_epochs = 40\n").unwrap();
    let table = dir.path().join("table.tsv");
    let out = depirony(&[
        "search",
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--models",
        "svm",
        "--protocol",
        "paper",
        "--seed",
        "5",
        "--config",
        config.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("search: 1023 cells"), "{text}");
    assert!(text.contains("best: model=svm"), "{text}");

    let table_text = std::fs::read_to_string(&table).unwrap();
    let data_rows = table_text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("model\t") && !l.is_empty())
        .count();
    assert_eq!(data_rows, 1023);
    assert!(table_text.contains("# protocol = paper"));
    assert!(table_text.contains("# config = svm.max_epochs = 40"));
}

#[test]
fn search_covers_the_four_language_synthetic_suite() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("caps.conf");
    std::fs::write(&config, "svm.max_epochs = 30\n").unwrap();
    for (lang, corpus) in depirony::synth::synthetic_language_suite(31, 24) {
        let base = dir.path().join(&lang);
        std::fs::create_dir_all(&base).unwrap();
        let split = |which: Split| -> String {
            let sentences: Vec<_> = corpus
                .items
                .iter()
                .filter(|i| i.split == which)
                .map(|i| i.sentence.clone())
                .collect();
            serialize_conllu(&sentences)
        };
        let train = base.join("train.conllu");
        let test = base.join("test.conllu");
        std::fs::write(&train, split(Split::Train)).unwrap();
        std::fs::write(&test, split(Split::Test)).unwrap();
        let table = base.join("table.tsv");
        let out = depirony(&[
            "search",
            "--train",
            train.to_str().unwrap(),
            "--test",
            test.to_str().unwrap(),
            "--lang",
            &lang,
            "--models",
            "svm",
            "--protocol",
            "paper",
            "--config",
            config.to_str().unwrap(),
            "--out",
            table.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{lang}: {}", String::from_utf8_lossy(&out.stderr));
        let rows = std::fs::read_to_string(&table)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with("model\t") && !l.is_empty())
            .count();
        assert_eq!(rows, 1023, "{lang} table must hold 1023 rows per model");
    }
}

#[test]
fn search_rejects_bad_protocol_as_usage() {
    let out = depirony(&[
        "search",
        "--train",
        "x.conllu",
        "--protocol",
        "leaderboard",
        "--out",
        "t.tsv",
    ]);
    assert_eq!(code(&out), 1);
    // the shorthand conflicts with an explicit protocol
    let out = depirony(&[
        "search",
        "--train",
        "x.conllu",
        "--protocol",
        "cv",
        "--paper-protocol",
        "--out",
        "t.tsv",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn paper_protocol_shorthand_selects_test_set_scoring() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = write_corpus(dir.path(), 24, 41);
    let config = dir.path().join("caps.conf");
    std::fs::write(&config, "svm.max_epochs = 25\n").unwrap();
    let table = dir.path().join("t.tsv");
    let out = depirony(&[
        "search",
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--models",
        "svm",
        "--paper-protocol",
        "--config",
        config.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&table)
        .unwrap()
        .contains("# protocol = paper"));
}

#[test]
fn embed_writes_vectors_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _) = write_corpus(dir.path(), 40, 23);
    let vectors = dir.path().join("vec.txt");
    let out = depirony(&[
        "embed",
        "--treebanks",
        train.to_str().unwrap(),
        "--dim",
        "10",
        "--epochs",
        "2",
        "--min-count",
        "1",
        "--out",
        vectors.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&vectors).unwrap();
    let table = depirony::embeddings::EmbeddingTable::from_text(&text).unwrap();
    assert_eq!(table.dim, 10);
    assert!(!table.words.is_empty());
    let meta = std::fs::read_to_string(dir.path().join("vec.meta")).unwrap();
    assert!(meta.contains("# command = embed"));
    assert!(meta.contains("# dim = 10"));
}

#[test]
fn analyze_errors_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = write_corpus(dir.path(), 40, 29);
    let model = dir.path().join("m.json");
    let out = depirony(&[
        "train",
        "--train",
        train.to_str().unwrap(),
        "--features",
        "ngrams",
        "--model",
        "svm",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let report = dir.path().join("errors.tsv");
    let out = depirony(&[
        "analyze-errors",
        "--model-file",
        model.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("kind\ttag\tfreq_all"));
    assert!(text.contains("# model = svm"));
}

#[test]
fn custom_negation_lexicon_is_stored_in_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = write_corpus(dir.path(), 30, 37);
    let lexicon = dir.path().join("cues.txt");
    std::fs::write(&lexicon, "tanéver\nnopeta\n").unwrap();
    let model = dir.path().join("m.json");
    let out = depirony(&[
        "train",
        "--train",
        train.to_str().unwrap(),
        "--features",
        "deprelneg,sidorovdeprel",
        "--negation-lexicon",
        lexicon.to_str().unwrap(),
        "--model",
        "svm",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let artifact = std::fs::read_to_string(&model).unwrap();
    assert!(artifact.contains("tanéver"), "custom cues must be stored");
    // evaluation re-extracts with the stored cues and runs clean
    let out = depirony(&[
        "eval",
        "--model-file",
        model.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_lists_all_subcommands() {
    let out = depirony(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for sub in [
        "validate",
        "extract",
        "train",
        "eval",
        "search",
        "embed",
        "analyze-errors",
    ] {
        assert!(text.contains(sub), "help missing {sub}");
    }
}
