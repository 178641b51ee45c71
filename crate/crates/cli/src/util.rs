//! Output plumbing: atomic writes, treebank discovery, and the error
//! type that carries the exit-code contract.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

/// Failure classified per the exit-code contract: 2 for data problems,
/// 3 for training problems (usage errors exit 1 via clap).
#[derive(Debug)]
pub struct CliError {
    pub source: anyhow::Error,
    pub code: u8,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

pub fn data_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError {
        source: e.into(),
        code: 2,
    }
}

pub fn train_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError {
        source: e.into(),
        code: 3,
    }
}

/// Classify an evaluation-layer error: trainer failures are training
/// errors, everything else is a data problem.
pub fn eval_err(e: depirony::evaluation::EvalError) -> CliError {
    match e {
        depirony::evaluation::EvalError::Learn(inner) => train_err(inner),
        other => data_err(other),
    }
}

/// Write via a temp file in the same directory plus rename, so an
/// interrupted run never leaves a truncated file at the final path.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = {
        let mut name = path
            .file_name()
            .map(|n| n.to_os_string())
            .unwrap_or_else(|| "out".into());
        name.push(format!(".tmp.{}", std::process::id()));
        match dir {
            Some(d) => d.join(name),
            None => PathBuf::from(name),
        }
    };
    let result = (|| -> anyhow::Result<()> {
        let mut file = fs::File::create(&tmp)
            .with_context(|| format!("cannot create {}", tmp.display()))?;
        file.write_all(contents.as_bytes())
            .with_context(|| format!("cannot write {}", tmp.display()))?;
        file.sync_all().ok();
        fs::rename(&tmp, path)
            .with_context(|| format!("cannot move output into place at {}", path.display()))?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(data_err)
}

/// Expand files and directories into a sorted list of `.conllu` files.
pub fn collect_conllu_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            walk(path, &mut files).map_err(data_err)?;
        } else {
            files.push(path.clone());
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(data_err(anyhow::anyhow!("no input files found")));
    }
    Ok(files)
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read directory {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    entries.sort();
    for entry in entries {
        if entry.is_dir() {
            walk(&entry, out)?;
        } else if entry.extension().is_some_and(|ext| ext == "conllu") {
            out.push(entry);
        }
    }
    Ok(())
}
