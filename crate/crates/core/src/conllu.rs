//! CoNLL-U parsing, validation, and serialization.
//!
//! One [`Token`] per syntactic-word row; multi-word token range lines are
//! recorded in [`Sentence::mwt_spans`] (and re-emitted on serialization),
//! empty-node lines (decimal ids) are counted and skipped. Validation
//! enforces contiguous 1..n ids, a single root, and acyclicity.

use std::fmt;

use thiserror::Error;

/// Number of tab-separated columns in a CoNLL-U token line.
pub const COLUMNS: usize = 10;

/// One syntactic word (one non-comment, non-range, non-empty-node row).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Sentence-local id, 1-based.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    /// Universal PoS tag (`VERB`, `NOUN`, `SYM`, ...). Kept verbatim.
    pub upos: String,
    pub xpos: Option<String>,
    /// Morphological features as ordered `key=value` pairs (`Polarity=Neg`, ...).
    pub feats: Vec<(String, String)>,
    /// Head id; 0 means the token attaches to the virtual root.
    pub head: usize,
    /// Universal dependency relation (`advmod`, `parataxis`, ...).
    pub deprel: String,
    pub deps: Option<String>,
    pub misc: Option<String>,
}

impl Token {
    /// True when the FEATS column carries `key=value`.
    pub fn has_feat(&self, key: &str, value: &str) -> bool {
        self.feats.iter().any(|(k, v)| k == key && v == value)
    }

    pub fn is_root(&self) -> bool {
        self.head == 0
    }
}

/// A multi-word token range line (`1-2  della  ...`), kept verbatim so
/// serialization is lossless. Feature extraction ignores these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MwtSpan {
    pub start: usize,
    pub end: usize,
    /// The 10 raw column values of the range line.
    pub columns: Vec<String>,
}

/// A sentence: tokens plus `#` metadata in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// `# key = value` lines as `(key, Some(value))`; bare `# comment`
    /// lines as `(comment, None)`. Order preserved.
    pub metadata: Vec<(String, Option<String>)>,
    pub mwt_spans: Vec<MwtSpan>,
    /// Count of empty-node lines (decimal ids) that were skipped.
    pub empty_nodes: usize,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// First metadata value for `key`, if any.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.as_deref())
    }

    pub fn sent_id(&self) -> Option<&str> {
        self.meta("sent_id")
    }

    /// Token by 1-based id. Valid for validated sentences.
    pub fn token(&self, id: usize) -> &Token {
        &self.tokens[id - 1]
    }

    /// Build the dependency-tree view. The sentence must have passed
    /// validation (as everything returned by the parser has).
    pub fn tree(&self) -> DepTree {
        DepTree::from_sentence(self)
    }
}

/// Head/children adjacency over a validated sentence.
///
/// Dependency distance between two tokens is 1 exactly when one is the
/// head of the other; [`DepTree::neighbors`] returns that DD=1 set.
#[derive(Debug, Clone)]
pub struct DepTree {
    root_id: usize,
    heads: Vec<usize>,
    children: Vec<Vec<usize>>,
}

impl DepTree {
    pub fn from_sentence(sentence: &Sentence) -> Self {
        let n = sentence.len();
        let mut heads = vec![0usize; n + 1];
        let mut children = vec![Vec::new(); n + 1];
        let mut root_id = 0;
        for token in &sentence.tokens {
            heads[token.id] = token.head;
            if token.head == 0 {
                root_id = token.id;
            } else {
                children[token.head].push(token.id);
            }
        }
        // token iteration is in linear order, so child lists already are
        DepTree {
            root_id,
            heads,
            children,
        }
    }

    pub fn root_id(&self) -> usize {
        self.root_id
    }

    /// Head of `id`; 0 for the root token.
    pub fn head(&self, id: usize) -> usize {
        self.heads[id]
    }

    /// Dependents of `id` in linear order.
    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    /// Tokens at dependency distance 1: dependents plus the head (when not
    /// the virtual root), in linear order.
    pub fn neighbors(&self, id: usize) -> Vec<usize> {
        let mut out = self.children[id].clone();
        if self.heads[id] != 0 {
            out.push(self.heads[id]);
            out.sort_unstable();
        }
        out
    }

    /// Always `n - 1` for a validated sentence.
    pub fn edge_count(&self) -> usize {
        (self.heads.len() - 1).saturating_sub(1)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConlluErrorKind {
    #[error("expected {COLUMNS} tab-separated columns, found {0}")]
    ColumnCount(usize),
    #[error("token id must be a positive integer, found {0:?}")]
    BadId(String),
    #[error("head must be a non-negative integer, found {0:?}")]
    BadHead(String),
    #[error("malformed FEATS entry {0:?} (expected key=value pairs joined by '|')")]
    BadFeats(String),
    #[error("malformed multi-word token range {0:?}")]
    BadMwtRange(String),
    #[error("token ids must be exactly 1..n in order: expected {expected}, found {found}")]
    IdSequence { expected: usize, found: usize },
    #[error("head {head} out of range for a {len}-token sentence")]
    HeadOutOfRange { head: usize, len: usize },
    #[error("token {0} is its own head")]
    SelfHead(usize),
    #[error("token {0} has an empty dependency relation")]
    EmptyDeprel(usize),
    #[error("no token with head 0 (single-root constraint)")]
    NoRoot,
    #[error("multiple root tokens: {0:?} (single-root constraint)")]
    MultipleRoots(Vec<usize>),
    #[error("dependency cycle through token {0}")]
    Cycle(usize),
    #[error("token {id} has head 0 but deprel {deprel:?} (expected \"root\")")]
    RootWithoutRootDeprel { id: usize, deprel: String },
    #[error("token {id} has deprel \"root\" but head {head}")]
    RootDeprelWithHead { id: usize, head: usize },
}

/// Parse or validation failure, tagged with the file line and, when known,
/// the sentence id.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub struct ConlluError {
    pub line: usize,
    pub sent_id: Option<String>,
    pub kind: ConlluErrorKind,
}

impl fmt::Display for ConlluError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.sent_id {
            Some(id) => write!(f, "line {} (sentence {}): {}", self.line, id, self.kind),
            None => write!(f, "line {}: {}", self.line, self.kind),
        }
    }
}

fn opt_column(raw: &str) -> Option<String> {
    if raw == "_" {
        None
    } else {
        Some(raw.to_string())
    }
}

fn parse_feats(raw: &str) -> Result<Vec<(String, String)>, ConlluErrorKind> {
    if raw == "_" {
        return Ok(Vec::new());
    }
    let mut feats = Vec::new();
    for part in raw.split('|') {
        match part.split_once('=') {
            Some((k, v)) if !k.is_empty() => feats.push((k.to_string(), v.to_string())),
            _ => return Err(ConlluErrorKind::BadFeats(part.to_string())),
        }
    }
    Ok(feats)
}

fn parse_block(lines: &[(usize, &str)]) -> Result<Sentence, ConlluError> {
    let mut sentence = Sentence::default();
    // line number of each token row, for validation diagnostics
    let mut token_lines = Vec::new();
    let first_line = lines.first().map(|(n, _)| *n).unwrap_or(0);

    for &(line_no, line) in lines {
        if let Some(comment) = line.strip_prefix('#') {
            match comment.split_once('=') {
                Some((k, v)) => sentence
                    .metadata
                    .push((k.trim().to_string(), Some(v.trim().to_string()))),
                None => sentence.metadata.push((comment.trim().to_string(), None)),
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != COLUMNS {
            return Err(ConlluError {
                line: line_no,
                sent_id: sentence.sent_id().map(String::from),
                kind: ConlluErrorKind::ColumnCount(cols.len()),
            });
        }
        let fail = |kind: ConlluErrorKind| ConlluError {
            line: line_no,
            sent_id: sentence.sent_id().map(String::from),
            kind,
        };

        let id_col = cols[0];
        if id_col.contains('-') {
            let span = id_col
                .split_once('-')
                .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
                .filter(|(a, b)| *a >= 1 && a <= b);
            match span {
                Some((start, end)) => sentence.mwt_spans.push(MwtSpan {
                    start,
                    end,
                    columns: cols.iter().map(|c| c.to_string()).collect(),
                }),
                None => return Err(fail(ConlluErrorKind::BadMwtRange(id_col.to_string()))),
            }
            continue;
        }
        if id_col.contains('.') {
            // enhanced-dependency empty node: counted, not part of the tree
            sentence.empty_nodes += 1;
            continue;
        }

        let id: usize = id_col
            .parse()
            .ok()
            .filter(|id| *id >= 1)
            .ok_or_else(|| fail(ConlluErrorKind::BadId(id_col.to_string())))?;
        let head: usize = cols[6]
            .parse()
            .map_err(|_| fail(ConlluErrorKind::BadHead(cols[6].to_string())))?;
        let feats = parse_feats(cols[5]).map_err(&fail)?;

        sentence.tokens.push(Token {
            id,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            xpos: opt_column(cols[4]),
            feats,
            head,
            deprel: cols[7].to_string(),
            deps: opt_column(cols[8]),
            misc: opt_column(cols[9]),
        });
        token_lines.push(line_no);
    }

    validate(&sentence, &token_lines, first_line)?;
    Ok(sentence)
}

fn validate(
    sentence: &Sentence,
    token_lines: &[usize],
    first_line: usize,
) -> Result<(), ConlluError> {
    let sent_id = sentence.sent_id().map(String::from);
    let n = sentence.len();
    let fail = |line: usize, kind: ConlluErrorKind| ConlluError {
        line,
        sent_id: sent_id.clone(),
        kind,
    };

    let mut roots = Vec::new();
    for (pos, token) in sentence.tokens.iter().enumerate() {
        let line = token_lines[pos];
        if token.id != pos + 1 {
            return Err(fail(
                line,
                ConlluErrorKind::IdSequence {
                    expected: pos + 1,
                    found: token.id,
                },
            ));
        }
        if token.head > n {
            return Err(fail(
                line,
                ConlluErrorKind::HeadOutOfRange {
                    head: token.head,
                    len: n,
                },
            ));
        }
        if token.head == token.id {
            return Err(fail(line, ConlluErrorKind::SelfHead(token.id)));
        }
        if token.deprel.is_empty() || token.deprel == "_" {
            return Err(fail(line, ConlluErrorKind::EmptyDeprel(token.id)));
        }
        if token.head == 0 {
            roots.push(token.id);
            if token.deprel != "root" {
                return Err(fail(
                    line,
                    ConlluErrorKind::RootWithoutRootDeprel {
                        id: token.id,
                        deprel: token.deprel.clone(),
                    },
                ));
            }
        } else if token.deprel == "root" {
            return Err(fail(
                line,
                ConlluErrorKind::RootDeprelWithHead {
                    id: token.id,
                    head: token.head,
                },
            ));
        }
    }
    if !sentence.tokens.is_empty() {
        if roots.is_empty() {
            return Err(fail(first_line, ConlluErrorKind::NoRoot));
        }
        if roots.len() > 1 {
            return Err(fail(first_line, ConlluErrorKind::MultipleRoots(roots)));
        }
    }
    for span in &sentence.mwt_spans {
        if span.end > n {
            return Err(fail(
                first_line,
                ConlluErrorKind::BadMwtRange(format!("{}-{}", span.start, span.end)),
            ));
        }
    }

    // cycle check: chase heads upward, marking nodes known to reach the root
    let mut state = vec![0u8; n + 1]; // 0 unknown, 1 on current path, 2 ok
    for start in 1..=n {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            if cur == 0 || state[cur] == 2 {
                break;
            }
            if state[cur] == 1 {
                return Err(fail(token_lines[cur - 1], ConlluErrorKind::Cycle(cur)));
            }
            state[cur] = 1;
            path.push(cur);
            cur = sentence.tokens[cur - 1].head;
        }
        for id in path {
            state[id] = 2;
        }
    }
    Ok(())
}

fn blocks(text: &str) -> Vec<Vec<(usize, &str)>> {
    let mut out = Vec::new();
    let mut current: Vec<(usize, &str)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else {
            current.push((i + 1, line));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Parse a CoNLL-U document, failing on the first malformed or invalid
/// sentence. Sentences are separated by blank lines.
pub fn parse_conllu(text: &str) -> Result<Vec<Sentence>, ConlluError> {
    blocks(text).iter().map(|block| parse_block(block)).collect()
}

/// Lenient variant for automatically parsed corpora: invalid sentences are
/// dropped and reported instead of aborting the whole file.
pub fn parse_conllu_lenient(text: &str) -> (Vec<Sentence>, Vec<ConlluError>) {
    let mut sentences = Vec::new();
    let mut errors = Vec::new();
    for block in blocks(text) {
        match parse_block(&block) {
            Ok(sentence) => sentences.push(sentence),
            Err(e) => errors.push(e),
        }
    }
    (sentences, errors)
}

fn write_token_line(out: &mut String, token: &Token) {
    use fmt::Write;
    let feats = if token.feats.is_empty() {
        "_".to_string()
    } else {
        token
            .feats
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("|")
    };
    writeln!(
        out,
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        token.id,
        token.form,
        token.lemma,
        token.upos,
        token.xpos.as_deref().unwrap_or("_"),
        feats,
        token.head,
        token.deprel,
        token.deps.as_deref().unwrap_or("_"),
        token.misc.as_deref().unwrap_or("_"),
    )
    .expect("write to String cannot fail");
}

/// Serialize sentences back to CoNLL-U text (LF endings, one blank line
/// after each sentence). `parse(serialize(x))` reproduces the tokens,
/// multi-word-token lines, and metadata of `x`; skipped empty-node lines
/// are not reconstructed.
pub fn serialize_conllu(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for sentence in sentences {
        for (key, value) in &sentence.metadata {
            match value {
                Some(v) => out.push_str(&format!("# {key} = {v}\n")),
                None => out.push_str(&format!("# {key}\n")),
            }
        }
        let mut mwt_iter = sentence.mwt_spans.iter().peekable();
        for token in &sentence.tokens {
            while let Some(span) = mwt_iter.peek() {
                if span.start == token.id {
                    out.push_str(&span.columns.join("\t"));
                    out.push('\n');
                    mwt_iter.next();
                } else {
                    break;
                }
            }
            write_token_line(&mut out, token);
        }
        out.push('\n');
    }
    out
}
