//! Raw text ingestion: tokenization, lexicon lemmatization with back-off,
//! and document truncation.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Documents are truncated to this many tokens in the truncated setting.
pub const DEFAULT_TRUNCATION: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDocument {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

impl TokenizedDocument {
    pub fn new(doc_id: impl Into<String>, tokens: Vec<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            tokens,
        }
    }

    pub fn from_text(doc: &RawDocument) -> Self {
        Self::new(doc.doc_id.clone(), tokenize(&doc.text))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercases `text` and splits it into maximal runs of alphanumeric
/// characters. Whitespace and punctuation both act as separators, so
/// punctuation-only fragments never survive.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Surface form → lemma table. Lookups are total: unknown forms map to
/// themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LemmaLexicon {
    entries: HashMap<String, String>,
}

impl LemmaLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads a `surface<TAB>lemma` file. Blank lines are skipped; a later
    /// entry for the same surface form replaces the earlier one.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lexicon = Self::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            match (fields.next(), fields.next(), fields.next()) {
                (Some(surface), Some(lemma), None) if !surface.is_empty() && !lemma.is_empty() => {
                    lexicon.insert(surface, lemma);
                }
                _ => {
                    return Err(Error::parse(
                        path,
                        i + 1,
                        "expected `surface<TAB>lemma` with two non-empty fields",
                    ))
                }
            }
        }
        Ok(lexicon)
    }

    pub fn insert(&mut self, surface: impl Into<String>, lemma: impl Into<String>) {
        self.entries.insert(surface.into(), lemma.into());
    }

    pub fn get(&self, surface: &str) -> Option<&str> {
        self.entries.get(surface).map(String::as_str)
    }

    pub fn lemmatize<'a>(&'a self, surface: &'a str) -> &'a str {
        self.get(surface).unwrap_or(surface)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(s, l)| (s.as_str(), l.as_str()))
    }
}

impl<S: Into<String>, L: Into<String>> FromIterator<(S, L)> for LemmaLexicon {
    fn from_iter<I: IntoIterator<Item = (S, L)>>(iter: I) -> Self {
        let mut lexicon = Self::new();
        for (s, l) in iter {
            lexicon.insert(s, l);
        }
        lexicon
    }
}

pub fn lemmatize_token(lexicon: &LemmaLexicon, surface: &str) -> String {
    lexicon.lemmatize(surface).to_owned()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmatizationStats {
    pub total_tokens: usize,
    pub backoff_tokens: usize,
}

impl LemmatizationStats {
    pub fn backoff_rate(&self) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.backoff_tokens as f64 / self.total_tokens as f64
        }
    }
}

pub fn lemmatize_corpus(
    lexicon: &LemmaLexicon,
    docs: &[TokenizedDocument],
) -> (Vec<TokenizedDocument>, LemmatizationStats) {
    let mut stats = LemmatizationStats::default();
    let out = docs
        .iter()
        .map(|doc| {
            let tokens = doc
                .tokens
                .iter()
                .map(|tok| {
                    stats.total_tokens += 1;
                    match lexicon.get(tok) {
                        Some(lemma) => lemma.to_owned(),
                        None => {
                            stats.backoff_tokens += 1;
                            tok.clone()
                        }
                    }
                })
                .collect();
            TokenizedDocument::new(doc.doc_id.clone(), tokens)
        })
        .collect();
    (out, stats)
}

pub fn truncate_document(doc: &TokenizedDocument, limit: usize) -> Result<TokenizedDocument> {
    if limit == 0 {
        return Err(Error::InvalidArgument("truncation limit must be >= 1".into()));
    }
    Ok(TokenizedDocument::new(
        doc.doc_id.clone(),
        doc.tokens.iter().take(limit).cloned().collect(),
    ))
}

/// Reads a corpus stored as one `doc_id<TAB>text` record per line.
pub fn read_corpus_tsv(path: impl AsRef<Path>) -> Result<Vec<RawDocument>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (doc_id, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected `doc_id<TAB>text`"))?;
        if doc_id.is_empty() {
            return Err(Error::parse(path, i + 1, "empty doc_id"));
        }
        docs.push(RawDocument {
            doc_id: doc_id.to_owned(),
            text: text.to_owned(),
        });
    }
    check_unique_ids(path, &docs)?;
    Ok(docs)
}

/// Reads every regular file under `dir` as one document, using the file
/// name as its id. Files are visited in name order.
pub fn read_corpus_dir(dir: impl AsRef<Path>) -> Result<Vec<RawDocument>> {
    let dir = dir.as_ref();
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.file_type().map_err(|e| Error::io(entry.path(), e))?.is_file() {
            paths.push(entry.path());
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            Ok(RawDocument {
                doc_id: p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                text,
            })
        })
        .collect()
}

fn check_unique_ids(path: &Path, docs: &[RawDocument]) -> Result<()> {
    let mut seen = HashMap::new();
    for (i, doc) in docs.iter().enumerate() {
        if let Some(prev) = seen.insert(doc.doc_id.as_str(), i) {
            return Err(Error::InvalidArgument(format!(
                "{}: duplicate doc_id {:?} (documents {} and {})",
                path.display(),
                doc.doc_id,
                prev + 1,
                i + 1
            )));
        }
    }
    Ok(())
}

/// Writes tokenized documents as `doc_id<TAB>tok tok ...` lines.
pub fn write_tokenized(path: impl AsRef<Path>, docs: &[TokenizedDocument]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for doc in docs {
        writeln!(w, "{}\t{}", doc.doc_id, doc.tokens.join(" ")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_tokenized(path: impl AsRef<Path>) -> Result<Vec<TokenizedDocument>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let (doc_id, toks) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, i + 1, "expected `doc_id<TAB>tokens`"))?;
            Ok(TokenizedDocument::new(
                doc_id,
                toks.split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect(),
            ))
        })
        .collect()
}
