//! Run configuration: the effective settings of a run, echoed into every
//! report header, plus the optional key=value hyper-parameter file.
//! Flags override file values; file values override built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use depirony::evaluation::ModelConfigs;
use depirony::learners::MaxFeatures;

/// Ordered key=value pairs describing one run, written as `# key = value`
/// header lines into the run's outputs.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    entries: Vec<(String, String)>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        let mut config = RunConfig::default();
        config.set("tool", format!("depirony {}", env!("CARGO_PKG_VERSION")));
        config.set("command", command);
        config
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn set_paths(&mut self, key: &str, paths: &[std::path::PathBuf]) {
        let joined = paths
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.set(key, joined);
    }

    /// Lines for svmlight/TSV headers (without the leading `# `).
    pub fn header_lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect()
    }

    /// The header block as text, each line `# key = value`.
    pub fn header_block(&self) -> String {
        self.header_lines()
            .iter()
            .map(|l| format!("# {l}\n"))
            .collect()
    }
}

/// Parse a plain `key = value` file (# comments, blank lines allowed).
pub fn parse_config_file(text: &str) -> anyhow::Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key = value, got {line:?}", i + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn get<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> anyhow::Result<T> {
    match map.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|_| anyhow!("config key {key}: cannot parse {raw:?}")),
        None => Ok(default),
    }
}

/// Build the per-model hyper-parameter block from an optional config
/// file, with the toolkit defaults for anything unspecified. The seed is
/// applied by the caller.
pub fn load_model_configs(path: Option<&Path>) -> anyhow::Result<(ModelConfigs, Vec<String>)> {
    let map = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config file {}", p.display()))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    let mut configs = ModelConfigs::default();

    configs.svm.c = get(&map, "svm.c", configs.svm.c)?;
    configs.svm.max_epochs = get(&map, "svm.max_epochs", configs.svm.max_epochs)?;
    configs.svm.tolerance = get(&map, "svm.tolerance", configs.svm.tolerance)?;
    if let Some(raw) = map.get("svm.learning_rate") {
        configs.svm.learning_rate = Some(
            raw.parse()
                .map_err(|_| anyhow!("config key svm.learning_rate: cannot parse {raw:?}"))?,
        );
    }

    configs.logreg.c = get(&map, "logreg.c", configs.logreg.c)?;
    configs.logreg.max_epochs = get(&map, "logreg.max_epochs", configs.logreg.max_epochs)?;
    configs.logreg.learning_rate =
        get(&map, "logreg.learning_rate", configs.logreg.learning_rate)?;
    configs.logreg.converge = get(&map, "logreg.converge", configs.logreg.converge)?;
    configs.logreg.tolerance = get(&map, "logreg.tolerance", configs.logreg.tolerance)?;

    configs.forest.n_trees = get(&map, "rf.trees", configs.forest.n_trees)?;
    configs.forest.bootstrap = get(&map, "rf.bootstrap", configs.forest.bootstrap)?;
    configs.forest.min_leaf = get(&map, "rf.min_leaf", configs.forest.min_leaf)?;
    configs.forest.min_split = get(&map, "rf.min_split", configs.forest.min_split)?;
    if let Some(raw) = map.get("rf.max_depth") {
        configs.forest.max_depth = Some(
            raw.parse()
                .map_err(|_| anyhow!("config key rf.max_depth: cannot parse {raw:?}"))?,
        );
    }
    if let Some(raw) = map.get("rf.max_features") {
        configs.forest.max_features = match raw.as_str() {
            "sqrt" => MaxFeatures::Sqrt,
            "all" => MaxFeatures::All,
            k => MaxFeatures::Fixed(
                k.parse()
                    .map_err(|_| anyhow!("config key rf.max_features: cannot parse {raw:?}"))?,
            ),
        };
    }

    configs.mlp.hidden = get(&map, "mlp.hidden", configs.mlp.hidden)?;
    configs.mlp.batch = get(&map, "mlp.batch", configs.mlp.batch)?;
    configs.mlp.learning_rate = get(&map, "mlp.learning_rate", configs.mlp.learning_rate)?;
    configs.mlp.max_epochs = get(&map, "mlp.max_epochs", configs.mlp.max_epochs)?;
    configs.mlp.patience = get(&map, "mlp.patience", configs.mlp.patience)?;
    configs.mlp.val_fraction = get(&map, "mlp.val_fraction", configs.mlp.val_fraction)?;
    configs.mlp.l2 = get(&map, "mlp.l2", configs.mlp.l2)?;
    configs.mlp.tolerance = get(&map, "mlp.tolerance", configs.mlp.tolerance)?;

    let known_prefixes = ["svm.", "logreg.", "rf.", "mlp."];
    for key in map.keys() {
        if !known_prefixes.iter().any(|p| key.starts_with(p)) {
            bail!("unknown config key {key:?}");
        }
    }

    let echoed = map.iter().map(|(k, v)| format!("{k} = {v}")).collect();
    Ok((configs, echoed))
}
