//! Subcommand implementations wiring the library pipeline together.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use depirony::conllu;
use depirony::corpus::{
    check_manifest, load_corpus, parse_manifest, CorpusSpec, Label, LabeledCorpus,
};
use depirony::embeddings::{extract_contexts, train_sgns, SgnsConfig};
use depirony::evaluation::{
    error_distribution_report, evaluate, run_baseline_svc_unigrams, search_best_features,
    EvalReport, Protocol, SearchConfig,
};
use depirony::features::{Extractor, FeatureBag, FeatureSpec, NegationLexicon};
use depirony::learners::{
    accuracy, predict_labels, train_forest, train_logreg, train_mlp, train_svm, ForestConfig,
    LogRegConfig, MlpConfig, Model, ModelArtifact, ModelKind, SvmConfig, TrainSettings,
    ARTIFACT_FORMAT_VERSION,
};
use depirony::vectorizer::{vectorize, write_svmlight, SparseVector, Vocabulary};

use crate::config::{load_model_configs, RunConfig};
use crate::util::{
    atomic_write, collect_conllu_files, data_err, eval_err, train_err, CliError,
};
use crate::{Command, FeatureArgs, LabelArgs};

fn usage_err(message: String) -> CliError {
    CliError {
        source: anyhow!(message),
        code: 1,
    }
}

fn load_split(
    train: &[PathBuf],
    test: &[PathBuf],
    labels: &LabelArgs,
) -> Result<LabeledCorpus, CliError> {
    let collect = |paths: &[PathBuf]| -> Result<Vec<PathBuf>, CliError> {
        if paths.is_empty() {
            Ok(Vec::new())
        } else {
            collect_conllu_files(paths)
        }
    };
    if train.is_empty() && test.is_empty() {
        return Err(data_err(anyhow!("no input files given")));
    }
    let spec = CorpusSpec {
        train_paths: collect(train)?,
        test_paths: collect(test)?,
        labels_path: labels.labels.clone(),
        language: labels.lang.clone(),
        lenient: labels.lenient,
    };
    let outcome = load_corpus(&spec).map_err(data_err)?;
    for dropped in &outcome.dropped {
        eprintln!("warning: dropped invalid sentence: {dropped}");
    }
    if let Some(path) = &labels.manifest {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))
            .map_err(data_err)?;
        let manifest = parse_manifest(&text).map_err(data_err)?;
        check_manifest(&outcome.corpus, &manifest).map_err(data_err)?;
        println!("manifest check: ok");
    }
    println!("corpus counts: {}", outcome.corpus.counts());
    Ok(outcome.corpus)
}

fn parse_spec(features: &FeatureArgs) -> Result<FeatureSpec, CliError> {
    FeatureSpec::parse_list(&features.features, features.lowercase_forms)
        .map_err(|e| usage_err(e.to_string()))
}

fn resolve_lexicon(
    path: Option<&Path>,
    language: &str,
) -> Result<NegationLexicon, CliError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read negation lexicon {}", p.display()))
                .map_err(data_err)?;
            Ok(NegationLexicon::from_lines(&text))
        }
        None => Ok(NegationLexicon::builtin(language)),
    }
}

struct Vectorized {
    bags: Vec<FeatureBag>,
    rows: Vec<SparseVector>,
    labels: Vec<Label>,
    vocab: Vocabulary,
}

fn extract_and_vectorize(
    corpus_items: Vec<(&depirony::conllu::Sentence, Label)>,
    spec: &FeatureSpec,
    lexicon: &NegationLexicon,
    binary: bool,
    min_df: usize,
    existing_vocab: Option<Vocabulary>,
) -> Result<Vectorized, CliError> {
    let extractor = Extractor::new(spec.clone(), lexicon.clone());
    let bags: Vec<FeatureBag> = corpus_items
        .iter()
        .map(|(sentence, _)| extractor.extract(sentence))
        .collect();
    let vocab = match existing_vocab {
        Some(v) => v,
        None => Vocabulary::build_with_min_df(bags.iter(), spec, min_df).map_err(data_err)?,
    };
    let rows = bags
        .iter()
        .map(|bag| vectorize(bag, &vocab, spec, binary))
        .collect::<Result<Vec<_>, _>>()
        .map_err(data_err)?;
    let labels = corpus_items.iter().map(|(_, label)| *label).collect();
    Ok(Vectorized {
        bags,
        rows,
        labels,
        vocab,
    })
}

fn train_by_kind(
    kind: ModelKind,
    rows: &[SparseVector],
    labels: &[Label],
    dim: usize,
    configs: &depirony::evaluation::ModelConfigs,
    seed: u64,
) -> Result<(Model, TrainSettings), CliError> {
    match kind {
        ModelKind::Svm => {
            let config = SvmConfig { seed, ..configs.svm.clone() };
            let model = train_svm(rows, labels, dim, &config).map_err(train_err)?;
            Ok((Model::Linear(model), TrainSettings::Svm(config)))
        }
        ModelKind::Logreg => {
            let config = LogRegConfig { seed, ..configs.logreg.clone() };
            let model = train_logreg(rows, labels, dim, &config).map_err(train_err)?;
            Ok((Model::Linear(model), TrainSettings::Logreg(config)))
        }
        ModelKind::Rf => {
            let config = ForestConfig { seed, ..configs.forest.clone() };
            let model = train_forest(rows, labels, dim, &config).map_err(train_err)?;
            Ok((Model::Forest(model), TrainSettings::Rf(config)))
        }
        ModelKind::Mlp => {
            let config = MlpConfig { seed, ..configs.mlp.clone() };
            let model = train_mlp(rows, labels, dim, &config).map_err(train_err)?;
            Ok((Model::Mlp(model), TrainSettings::Mlp(config)))
        }
    }
}

fn write_report(
    path: Option<&Path>,
    run: &RunConfig,
    report: &EvalReport,
) -> Result<(), CliError> {
    if let Some(path) = path {
        atomic_write(path, &format!("{}{}", run.header_block(), report.to_tsv()))?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

pub fn run(command: Command, jobs: usize) -> Result<(), CliError> {
    match command {
        Command::Validate { input, lenient } => {
            let files = collect_conllu_files(&input)?;
            let mut total = 0usize;
            let mut dropped = 0usize;
            for file in &files {
                let text = std::fs::read_to_string(file)
                    .with_context(|| format!("cannot read {}", file.display()))
                    .map_err(data_err)?;
                let count = if lenient {
                    let (sentences, errors) = conllu::parse_conllu_lenient(&text);
                    for e in &errors {
                        eprintln!("warning: {}: {e}", file.display());
                    }
                    dropped += errors.len();
                    sentences.len()
                } else {
                    conllu::parse_conllu(&text).map_err(data_err)?.len()
                };
                println!("{}: {count} sentences", file.display());
                total += count;
            }
            if dropped > 0 {
                println!("valid sentences: {total} ({dropped} dropped)");
            } else {
                println!("valid sentences: {total}");
            }
            Ok(())
        }

        Command::Extract {
            input,
            labels,
            features,
            out,
            vocab_out,
            apply_vocab,
            dump_bags,
        } => {
            let spec = parse_spec(&features)?;
            let lexicon = resolve_lexicon(features.negation_lexicon.as_deref(), &labels.lang)?;
            let corpus = load_split(&input, &[], &labels)?;
            let items: Vec<_> = corpus
                .items
                .iter()
                .map(|i| (&i.sentence, i.label))
                .collect();
            let existing = match &apply_vocab {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("cannot read vocabulary {}", path.display()))
                        .map_err(data_err)?;
                    Some(Vocabulary::parse_tsv(&text).map_err(data_err)?)
                }
                None => None,
            };
            let vectorized = extract_and_vectorize(
                items,
                &spec,
                &lexicon,
                features.binary,
                features.min_df,
                existing,
            )?;

            let mut run = RunConfig::new("extract");
            run.set_paths("input", &input);
            run.set("features", spec.names());
            run.set("lowercase_forms", spec.lowercase_forms);
            run.set("binary", features.binary);
            run.set("min_df", features.min_df);
            run.set("language", &labels.lang);
            run.set("vocabulary_size", vectorized.vocab.len());

            let matrix = write_svmlight(&vectorized.labels, &vectorized.rows, &run.header_lines());
            atomic_write(&out, &matrix)?;
            println!(
                "wrote {} rows over {} features to {}",
                vectorized.rows.len(),
                vectorized.vocab.len(),
                out.display()
            );
            if let Some(path) = vocab_out {
                atomic_write(
                    &path,
                    &format!("{}{}", run.header_block(), vectorized.vocab.to_tsv()),
                )?;
                println!("vocabulary written to {}", path.display());
            }
            if let Some(path) = dump_bags {
                let mut dump = run.header_block();
                for (item, bag) in corpus.items.iter().zip(&vectorized.bags) {
                    let id = item.sentence.sent_id().unwrap_or("?");
                    dump.push_str(&format!("# sent_id = {id}\n"));
                    dump.push_str(&bag.to_tsv());
                }
                atomic_write(&path, &dump)?;
                println!("bags written to {}", path.display());
            }
            Ok(())
        }

        Command::Train {
            train,
            labels,
            features,
            model,
            seed,
            config,
            out,
        } => {
            let kind = ModelKind::parse(&model)
                .ok_or_else(|| usage_err(format!("unknown model {model:?} (svm|logreg|rf|mlp)")))?;
            let spec = parse_spec(&features)?;
            let lexicon = resolve_lexicon(features.negation_lexicon.as_deref(), &labels.lang)?;
            let (configs, _) = load_model_configs(config.as_deref()).map_err(data_err)?;
            let corpus = load_split(&train, &[], &labels)?;
            let items: Vec<_> = corpus
                .items
                .iter()
                .map(|i| (&i.sentence, i.label))
                .collect();
            let vectorized = extract_and_vectorize(
                items,
                &spec,
                &lexicon,
                features.binary,
                features.min_df,
                None,
            )?;
            let (trained, settings) = train_by_kind(
                kind,
                &vectorized.rows,
                &vectorized.labels,
                vectorized.vocab.len(),
                &configs,
                seed,
            )?;
            let train_accuracy =
                accuracy(&trained, &vectorized.rows, &vectorized.labels).map_err(train_err)?;
            let artifact = ModelArtifact {
                format_version: ARTIFACT_FORMAT_VERSION,
                toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
                language: labels.lang.clone(),
                seed,
                feature_spec: spec,
                binary_counts: features.binary,
                negation_cues: lexicon.cues().map(String::from).collect(),
                settings,
                train_accuracy,
                vocabulary: vectorized.vocab,
                model: trained,
            };
            atomic_write(&out, &artifact.to_json())?;
            println!(
                "trained {kind} on {} examples ({} features); train accuracy {train_accuracy:.4}",
                vectorized.rows.len(),
                artifact.vocabulary.len()
            );
            println!("model written to {}", out.display());
            Ok(())
        }

        Command::Eval {
            model_file,
            baseline_unigrams,
            train,
            test,
            labels,
            seed,
            config,
            report,
        } => {
            let (configs, _) = load_model_configs(config.as_deref()).map_err(data_err)?;
            if baseline_unigrams {
                let corpus = load_split(&train, &test, &labels)?;
                let search = SearchConfig {
                    seed,
                    configs,
                    ..SearchConfig::default()
                };
                let result = run_baseline_svc_unigrams(&corpus, &search).map_err(eval_err)?;
                println!("{result}");
                let mut run = RunConfig::new("eval-baseline-unigrams");
                run.set("seed", seed);
                run.set("language", &labels.lang);
                write_report(report.as_deref(), &run, &result)?;
                return Ok(());
            }

            let model_path = model_file.expect("clap enforces --model-file without baseline");
            let artifact = ModelArtifact::load(&model_path).map_err(data_err)?;
            let corpus = load_split(&[], &test, &labels)?;
            let (pred, gold) = predict_corpus(&artifact, &corpus)?;
            let result = evaluate(&pred, &gold).map_err(eval_err)?;
            println!("{result}");
            let mut run = RunConfig::new("eval");
            run.set("model_file", model_path.display());
            run.set("model", artifact.kind());
            run.set("features", artifact.feature_spec.names());
            run.set("seed", artifact.seed);
            write_report(report.as_deref(), &run, &result)?;
            Ok(())
        }

        Command::Search {
            train,
            test,
            labels,
            models,
            protocol,
            paper_protocol,
            folds,
            seed,
            lowercase_forms,
            binary,
            negation_lexicon,
            config,
            out,
        } => {
            let protocol = match (paper_protocol, protocol.as_str()) {
                (true, _) | (false, "paper") => Protocol::Paper,
                (false, "cv") => Protocol::CrossVal { folds },
                (false, other) => {
                    return Err(usage_err(format!("unknown protocol {other:?} (cv|paper)")))
                }
            };
            let model_kinds: Vec<ModelKind> = models
                .split(',')
                .map(|m| {
                    ModelKind::parse(m.trim())
                        .ok_or_else(|| usage_err(format!("unknown model {m:?}")))
                })
                .collect::<Result<_, _>>()?;
            let (configs, echoed) = load_model_configs(config.as_deref()).map_err(data_err)?;
            let corpus = load_split(&train, &test, &labels)?;
            let negation_override = match &negation_lexicon {
                Some(path) => Some(resolve_lexicon(Some(path), &labels.lang)?),
                None => None,
            };
            let search = SearchConfig {
                models: model_kinds,
                protocol,
                lowercase_forms,
                binary_counts: binary,
                seed,
                configs,
                negation_override,
                ..SearchConfig::default()
            };
            let outcome = search_best_features(&corpus, &search).map_err(eval_err)?;

            let mut run = RunConfig::new("search");
            run.set_paths("train", &train);
            run.set_paths("test", &test);
            run.set("models", &models);
            run.set("protocol", protocol);
            run.set("seed", seed);
            run.set("lowercase_forms", lowercase_forms);
            run.set("binary", binary);
            run.set("jobs", jobs);
            run.set("language", &labels.lang);
            for line in &echoed {
                run.set("config", line);
            }
            atomic_write(&out, &format!("{}{}", run.header_block(), outcome.to_tsv()))?;

            let scored = outcome.cells.iter().filter(|c| c.result.is_ok()).count();
            println!(
                "search: {} cells ({} scored, {} failed) written to {}",
                outcome.cells.len(),
                scored,
                outcome.cells.len() - scored,
                out.display()
            );
            match outcome.argmax() {
                Some(best) => {
                    let score = best.result.as_ref().unwrap();
                    println!(
                        "best: model={} macro_f1={:.4} features={}",
                        best.model, score.macro_f1, best.namespaces
                    );
                }
                None => println!("best: none (all cells failed)"),
            }
            Ok(())
        }

        Command::Embed {
            treebanks,
            dim,
            negatives,
            epochs,
            min_count,
            learning_rate,
            seed,
            lowercase_forms,
            parallel,
            lenient,
            out,
        } => {
            let files = collect_conllu_files(&treebanks)?;
            let mut sentences = Vec::new();
            for file in &files {
                let text = std::fs::read_to_string(file)
                    .with_context(|| format!("cannot read {}", file.display()))
                    .map_err(data_err)?;
                if lenient {
                    let (parsed, errors) = conllu::parse_conllu_lenient(&text);
                    for e in &errors {
                        eprintln!("warning: {}: {e}", file.display());
                    }
                    sentences.extend(parsed);
                } else {
                    sentences.extend(conllu::parse_conllu(&text).map_err(data_err)?);
                }
            }
            let pairs = extract_contexts(&sentences, lowercase_forms);
            println!(
                "extracted {} context pairs from {} sentences in {} files",
                pairs.len(),
                sentences.len(),
                files.len()
            );
            let config = SgnsConfig {
                dim,
                negatives,
                epochs,
                min_count,
                learning_rate,
                seed,
                parallel,
                ..SgnsConfig::default()
            };
            let table = train_sgns(&pairs, &config).map_err(train_err)?;
            atomic_write(&out, &table.to_text())?;

            // the vector format has no comment syntax, so the run config
            // goes into a sidecar
            let mut run = RunConfig::new("embed");
            run.set_paths("treebanks", &treebanks);
            run.set("dim", dim);
            run.set("negatives", negatives);
            run.set("epochs", epochs);
            run.set("min_count", min_count);
            run.set("learning_rate", learning_rate);
            run.set("seed", seed);
            run.set("lowercase_forms", lowercase_forms);
            run.set("parallel", parallel);
            run.set("vocab_size", table.words.len());
            let meta = out.with_extension("meta");
            atomic_write(&meta, &run.header_block())?;
            println!(
                "trained {}x{dim} embeddings; vectors at {}, run config at {}",
                table.words.len(),
                out.display(),
                meta.display()
            );
            Ok(())
        }

        Command::AnalyzeErrors {
            model_file,
            test,
            labels,
            out,
        } => {
            let artifact = ModelArtifact::load(&model_file).map_err(data_err)?;
            let corpus = load_split(&[], &test, &labels)?;
            let (pred, gold) = predict_corpus(&artifact, &corpus)?;
            let sentences: Vec<_> = corpus.items.iter().map(|i| &i.sentence).collect();
            let report = error_distribution_report(&sentences, &gold, &pred).map_err(eval_err)?;
            print!("{report}");
            let mut run = RunConfig::new("analyze-errors");
            run.set("model_file", model_file.display());
            run.set("model", artifact.kind());
            run.set("features", artifact.feature_spec.names());
            atomic_write(&out, &format!("{}{}", run.header_block(), report.to_tsv()))?;
            println!("error report written to {}", out.display());
            Ok(())
        }
    }
}

/// Re-extract features per the artifact's spec and predict the corpus,
/// returning (predictions, gold labels).
fn predict_corpus(
    artifact: &ModelArtifact,
    corpus: &LabeledCorpus,
) -> Result<(Vec<Label>, Vec<Label>), CliError> {
    let lexicon = NegationLexicon::from_cues(artifact.negation_cues.iter().cloned());
    let extractor = Extractor::new(artifact.feature_spec.clone(), lexicon);
    let rows = corpus
        .items
        .iter()
        .map(|item| {
            let bag = extractor.extract(&item.sentence);
            vectorize(
                &bag,
                &artifact.vocabulary,
                &artifact.feature_spec,
                artifact.binary_counts,
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(data_err)?;
    let pred = predict_labels(&artifact.model, &rows).map_err(data_err)?;
    let gold = corpus.items.iter().map(|i| i.label).collect();
    Ok((pred, gold))
}
