//! Corpus loading and text normalization.
//!
//! A corpus is a directory of UTF-8 `.txt` files, one document each. Cited
//! text inside a document is delimited by markers: `*...*` spans hold Latin
//! citations, `{...}` spans hold citations in other languages (mostly
//! vernacular). Both kinds are the production of someone other than the
//! author, so the default policy removes them before any feature is counted.
//!
//! Two layout conventions are supported:
//! - file names `<Author>_<DocId>.txt`, author taken from the prefix;
//! - an explicit manifest CSV (`file,author,genre`) that overrides naming.

mod fetch;

pub use fetch::{fetch_dataset, unpack_archive, FetchError};

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus directory {0} contains no .txt documents")]
    EmptyDirectory(PathBuf),
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}: {source}")]
    BadMarkers { file: String, source: MarkerError },
    #[error("duplicate document id {0}")]
    DuplicateDocId(String),
    #[error("file name {0} does not follow <Author>_<DocId>.txt and no manifest entry covers it")]
    BadFileName(String),
    #[error("manifest line {line}: expected `file,author,genre`, got {got:?}")]
    BadManifest { line: usize, got: String },
    #[error("document count mismatch: expected {expected}, loaded {actual}")]
    CountMismatch { expected: usize, actual: usize },
    #[error("config line {line}: expected `key = value`, got {got:?}")]
    BadConfig { line: usize, got: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MarkerError {
    #[error("unclosed `*` citation span opened at byte {0}")]
    UnclosedLatin(usize),
    #[error("unclosed `{{` citation span opened at byte {0}")]
    UnclosedVernacular(usize),
    #[error("`}}` at byte {0} closes nothing")]
    StrayClose(usize),
    #[error("`{{` at byte {0} opens inside another `{{...}}` span")]
    NestedVernacular(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Genre {
    Epistolary,
    Literary,
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Genre::Epistolary => write!(f, "epistolary"),
            Genre::Literary => write!(f, "literary"),
        }
    }
}

/// One curated text with its author label.
///
/// `raw_text` keeps the citation markers; stripping happens downstream so
/// that the policy (remove or keep cited text) stays a per-run choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub author: String,
    pub title: String,
    pub genre: Genre,
    pub raw_text: String,
    pub word_count: usize,
}

/// An ordered, validated collection of documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub documents: Vec<Document>,
    /// Author labels whose texts are mixed collections; they only ever serve
    /// as negative examples and never get a verifier of their own.
    pub miscellanea_authors: BTreeSet<String>,
}

impl Corpus {
    /// Authors with at least two documents, excluding miscellanea labels.
    pub fn eligible_authors(&self) -> Vec<String> {
        let mut authors: Vec<String> = self
            .documents
            .iter()
            .map(|d| d.author.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        authors.retain(|a| {
            !self.miscellanea_authors.contains(a)
                && self.documents.iter().filter(|d| &d.author == a).count() >= 2
        });
        authors
    }

    /// Hex digest over (doc_id, author, raw_text) in corpus order; recorded
    /// in run manifests so a report can be traced to the exact input.
    pub fn checksum(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for d in &self.documents {
            hasher.update(d.doc_id.as_bytes());
            hasher.update([0]);
            hasher.update(d.author.as_bytes());
            hasher.update([0]);
            hasher.update(d.raw_text.as_bytes());
            hasher.update([0]);
        }
        hex(&hasher.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpanAction {
    Remove,
    Keep,
}

/// What to do with each kind of citation span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationPolicy {
    pub latin_citations: SpanAction,
    pub vernacular_citations: SpanAction,
}

impl Default for CitationPolicy {
    fn default() -> Self {
        CitationPolicy {
            latin_citations: SpanAction::Remove,
            vernacular_citations: SpanAction::Remove,
        }
    }
}

impl CitationPolicy {
    pub fn keep_all() -> Self {
        CitationPolicy {
            latin_citations: SpanAction::Keep,
            vernacular_citations: SpanAction::Keep,
        }
    }
}

/// A parsed citation span: byte range of the *content* between the markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CitationSpan {
    pub start: usize,
    pub end: usize,
    pub latin: bool,
}

/// Validate marker balance and list all citation spans.
///
/// `*` markers alternate open/close; `{`/`}` must pair and may not nest.
/// A `*` inside a `{...}` span is treated as literal text, which matches how
/// the curated texts mark a vernacular quotation containing an asterisk-free
/// interior; the reverse (braces inside `*...*`) is likewise literal.
pub fn parse_citation_spans(text: &str) -> Result<Vec<CitationSpan>, MarkerError> {
    let mut spans = Vec::new();
    let mut latin_open: Option<usize> = None;
    let mut vern_open: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        match ch {
            '*' if vern_open.is_none() => match latin_open.take() {
                Some(start) => spans.push(CitationSpan {
                    start,
                    end: i,
                    latin: true,
                }),
                None => latin_open = Some(i + 1),
            },
            '{' if latin_open.is_none() => {
                if vern_open.is_some() {
                    return Err(MarkerError::NestedVernacular(i));
                }
                vern_open = Some(i + 1);
            }
            '}' if latin_open.is_none() => match vern_open.take() {
                Some(start) => spans.push(CitationSpan {
                    start,
                    end: i,
                    latin: false,
                }),
                None => return Err(MarkerError::StrayClose(i)),
            },
            _ => {}
        }
    }
    if let Some(start) = latin_open {
        return Err(MarkerError::UnclosedLatin(start - 1));
    }
    if let Some(start) = vern_open {
        return Err(MarkerError::UnclosedVernacular(start - 1));
    }
    Ok(spans)
}

/// Remove citation spans according to the policy.
///
/// Marker characters never survive into the output; a kept span contributes
/// its content only. Whitespace around removals collapses to single spaces.
pub fn strip_citations(text: &str, policy: CitationPolicy) -> Result<String, MarkerError> {
    let spans = parse_citation_spans(text)?;
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0usize;
    for span in &spans {
        out.push_str(&text[cursor..span.start - 1]);
        let keep = match span.latin {
            true => policy.latin_citations == SpanAction::Keep,
            false => policy.vernacular_citations == SpanAction::Keep,
        };
        if keep {
            out.push_str(&text[span.start..span.end]);
        } else {
            out.push(' ');
        }
        cursor = span.end + 1;
    }
    out.push_str(&text[cursor..]);
    Ok(collapse_whitespace(&out))
}

/// Collapse whitespace runs to single spaces and trim the ends.
pub fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_space = true;
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !in_space {
                out.push(' ');
                in_space = true;
            }
        } else {
            out.push(ch);
            in_space = false;
        }
    }
    if out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Orthographic and case normalization: lowercase, `v` to `u`, punctuation
/// replaced by spaces, whitespace collapsed.
///
/// Medieval Latin used a single grapheme for u/v and the editions disagree on
/// which to print, so both always map to `u`. Punctuation is editorial, not
/// authorial, hence dropped. Runs after sentence splitting in the pipeline;
/// the splitter needs the punctuation this function destroys.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        for low in ch.to_lowercase() {
            match low {
                'v' => out.push('u'),
                // Letters that stay uppercase under to_lowercase (math
                // symbols and the like) have no place in the normalized
                // alphabet either.
                c if c.is_alphanumeric() && !c.is_uppercase() => out.push(c),
                _ => out.push(' '),
            }
        }
    }
    collapse_whitespace(&out)
}

pub fn count_words(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Loader options; `expected_documents` enables manifest-style validation of
/// the known corpora (294 epistolary, 30 literary).
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub name: String,
    pub genre: Option<Genre>,
    pub manifest: Option<PathBuf>,
    pub miscellanea_authors: BTreeSet<String>,
    pub expected_documents: Option<usize>,
}

#[derive(Debug, Clone)]
struct ManifestEntry {
    file: String,
    author: String,
    genre: Genre,
}

fn parse_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (idx == 0 && line.eq_ignore_ascii_case("file,author,genre")) {
            continue;
        }
        let fields = split_csv_line(line);
        if fields.len() != 3 {
            return Err(CorpusError::BadManifest {
                line: idx + 1,
                got: line.to_string(),
            });
        }
        let genre = match fields[2].trim().to_ascii_lowercase().as_str() {
            "epistolary" => Genre::Epistolary,
            "literary" => Genre::Literary,
            _ => {
                return Err(CorpusError::BadManifest {
                    line: idx + 1,
                    got: line.to_string(),
                });
            }
        };
        entries.push(ManifestEntry {
            file: fields[0].trim().to_string(),
            author: fields[1].trim().to_string(),
            genre,
        });
    }
    Ok(entries)
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(ch) = chars.next() {
        match ch {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => {
                fields.push(std::mem::take(&mut cur));
            }
            _ => cur.push(ch),
        }
    }
    fields.push(cur);
    fields
}

/// Load every `.txt` file under `root` into a corpus.
///
/// Documents come back ordered lexicographically by `doc_id`, so two loads of
/// the same tree produce identical values. Marker balance is validated here;
/// a bad file is reported with its name and byte offset.
pub fn load_corpus(root: &Path, options: &LoadOptions) -> Result<Corpus, CorpusError> {
    let manifest = match &options.manifest {
        Some(path) => Some(parse_manifest(path)?),
        None => {
            let default = root.join("manifest.csv");
            if default.is_file() {
                Some(parse_manifest(&default)?)
            } else {
                None
            }
        }
    };

    let mut files: Vec<PathBuf> = Vec::new();
    let entries = std::fs::read_dir(root).map_err(|source| CorpusError::Unreadable {
        path: root.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::Unreadable {
            path: root.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.extension().is_some_and(|e| e == "txt") && path.is_file() {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(CorpusError::EmptyDirectory(root.to_path_buf()));
    }

    let mut documents = Vec::with_capacity(files.len());
    for path in files {
        let file_name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let stem = path
            .file_stem()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();

        let manifest_entry = manifest
            .as_ref()
            .and_then(|m| m.iter().find(|e| e.file == file_name));
        let (author, title, genre) = match manifest_entry {
            Some(e) => (e.author.clone(), stem.clone(), e.genre),
            None => {
                let Some((author, rest)) = stem.split_once('_') else {
                    return Err(CorpusError::BadFileName(file_name));
                };
                (
                    author.to_string(),
                    rest.to_string(),
                    options.genre.unwrap_or(Genre::Epistolary),
                )
            }
        };

        let raw_text =
            std::fs::read_to_string(&path).map_err(|source| CorpusError::Unreadable {
                path: path.clone(),
                source,
            })?;
        parse_citation_spans(&raw_text).map_err(|source| CorpusError::BadMarkers {
            file: file_name.clone(),
            source,
        })?;

        documents.push(Document {
            doc_id: stem,
            author,
            title,
            genre,
            word_count: count_words(&raw_text),
            raw_text,
        });
    }

    documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    for pair in documents.windows(2) {
        if pair[0].doc_id == pair[1].doc_id {
            return Err(CorpusError::DuplicateDocId(pair[0].doc_id.clone()));
        }
    }
    if let Some(expected) = options.expected_documents {
        if documents.len() != expected {
            return Err(CorpusError::CountMismatch {
                expected,
                actual: documents.len(),
            });
        }
    }

    Ok(Corpus {
        name: options.name.clone(),
        documents,
        miscellanea_authors: options.miscellanea_authors.clone(),
    })
}

/// Flat `key = value` config for corpus conventions.
///
/// Recognized keys:
/// - `miscellanea_authors`: comma-separated author labels;
/// - `expected_documents`: integer, validated after load;
/// - `dataset.<name>.url` / `dataset.<name>.checksum`: fetch coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusConfig {
    pub entries: Vec<(String, String)>,
}

impl CorpusConfig {
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CorpusError::BadConfig {
                    line: idx + 1,
                    got: raw.to_string(),
                });
            };
            entries.push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(CorpusConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn miscellanea_authors(&self) -> BTreeSet<String> {
        self.get("miscellanea_authors")
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            })
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn citation_spans_parse_mixed_markers() {
        let spans = parse_citation_spans("abc *x* {y} d").unwrap();
        assert_eq!(spans.len(), 2);
        assert!(spans[0].latin);
        assert!(!spans[1].latin);
        assert_eq!(&"abc *x* {y} d"[spans[0].start..spans[0].end], "x");
        assert_eq!(&"abc *x* {y} d"[spans[1].start..spans[1].end], "y");
    }

    #[test]
    fn unbalanced_markers_are_rejected() {
        assert_eq!(
            parse_citation_spans("a *b"),
            Err(MarkerError::UnclosedLatin(2))
        );
        assert_eq!(
            parse_citation_spans("a {b"),
            Err(MarkerError::UnclosedVernacular(2))
        );
        assert_eq!(
            parse_citation_spans("a }b"),
            Err(MarkerError::StrayClose(2))
        );
        assert_eq!(
            parse_citation_spans("{a {b}}"),
            Err(MarkerError::NestedVernacular(3))
        );
    }

    #[test]
    fn strip_removes_latin_span() {
        let out = strip_citations("ante *lorem ipsum* post", CitationPolicy::default()).unwrap();
        assert_eq!(out, "ante post");
    }

    #[test]
    fn strip_removes_vernacular_span() {
        let out = strip_citations("ante {toscano} post", CitationPolicy::default()).unwrap();
        assert_eq!(out, "ante post");
    }

    #[test]
    fn strip_without_markers_is_identity() {
        let text = "nulla citatio hic est";
        assert_eq!(
            strip_citations(text, CitationPolicy::default()).unwrap(),
            text
        );
    }

    #[test]
    fn keep_policy_drops_only_marker_characters() {
        let text = "ante *lorem* et {uolgare} post";
        let out = strip_citations(text, CitationPolicy::keep_all()).unwrap();
        assert_eq!(out, "ante lorem et uolgare post");
        let markers = text
            .chars()
            .filter(|c| matches!(c, '*' | '{' | '}'))
            .count();
        assert_eq!(out.len(), text.len() - markers);
    }

    #[test]
    fn normalize_maps_v_to_u_and_lowercases() {
        assert_eq!(normalize("Veni Vidi"), "ueni uidi");
    }

    #[test]
    fn normalize_strips_punctuation() {
        assert_eq!(normalize("iam, iam."), "iam iam");
    }

    #[test]
    fn normalize_empty_is_empty() {
        assert_eq!(normalize(""), "");
    }

    #[test]
    fn normalize_is_idempotent() {
        let samples = ["Veni, Vidi; Vici!", "  spatia   multa  ", "IAM."];
        for s in samples {
            let once = normalize(s);
            assert_eq!(normalize(&once), once);
        }
    }

    #[test]
    fn normalized_alphabet_has_no_uppercase_v_or_punctuation() {
        let out = normalize("Quo Vsque; tandem? ABVTERE, Catilina!");
        assert!(out
            .chars()
            .all(|c| c == ' ' || (c.is_alphanumeric() && !c.is_uppercase())));
        assert!(!out.contains('v'));
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_corpus(dir.path(), &LoadOptions::default());
        assert!(matches!(err, Err(CorpusError::EmptyDirectory(_))));
    }

    #[test]
    fn loading_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        for (name, text) in [
            ("Beta_d2.txt", "Secunda epistola hic est."),
            ("Alpha_d1.txt", "Prima epistola *cum citatione* scripta."),
            ("Alpha_d3.txt", "Tertia epistola breuis."),
        ] {
            std::fs::write(dir.path().join(name), text).unwrap();
        }
        let options = LoadOptions {
            name: "t".into(),
            ..Default::default()
        };
        let one = load_corpus(dir.path(), &options).unwrap();
        let two = load_corpus(dir.path(), &options).unwrap();
        assert_eq!(one, two);
        // Lexicographic by doc id, regardless of directory order.
        let ids: Vec<&str> = one.documents.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["Alpha_d1", "Alpha_d3", "Beta_d2"]);
    }

    #[test]
    fn manifest_overrides_the_naming_convention() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("ep001.txt"), "Prima epistola.").unwrap();
        std::fs::write(dir.path().join("tract01.txt"), "Tractatus primus.").unwrap();
        std::fs::write(
            dir.path().join("manifest.csv"),
            "file,author,genre\nep001.txt,Pietro della Vigna,epistolary\ntract01.txt,Bene Florentinus,literary\n",
        )
        .unwrap();
        let corpus = load_corpus(
            dir.path(),
            &LoadOptions {
                name: "m".into(),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(corpus.documents[0].author, "Pietro della Vigna");
        assert_eq!(corpus.documents[0].genre, Genre::Epistolary);
        assert_eq!(corpus.documents[1].author, "Bene Florentinus");
        assert_eq!(corpus.documents[1].genre, Genre::Literary);
    }

    #[test]
    fn config_roundtrip() {
        let cfg = CorpusConfig::parse(
            "# comment\nmiscellanea_authors = Misc, Varia\ndataset.epi.url = http://x/y.zip\n",
        )
        .unwrap();
        assert_eq!(cfg.get("dataset.epi.url"), Some("http://x/y.zip"));
        let misc = cfg.miscellanea_authors();
        assert!(misc.contains("Misc") && misc.contains("Varia"));
        assert!(CorpusConfig::parse("odd line without equals").is_err());
    }
}
