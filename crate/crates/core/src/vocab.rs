//! Document-frequency vocabularies and bag-of-words encoding.
//!
//! Two schemes are supported: the top-`n` words by document frequency, and
//! a filtered lemma vocabulary that drops the `skip` most frequent words and
//! keeps the next `n`. A filtered lemma vocabulary can be projected onto the
//! surface forms that lemmatize into it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{LemmaLexicon, TokenizedDocument};
use crate::error::{Error, Result};

pub const DEFAULT_VOCAB_SIZE: usize = 10_000;
pub const DEFAULT_SKIP_TOP: usize = 100;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocumentFrequencyTable {
    counts: HashMap<String, usize>,
    num_docs: usize,
}

impl DocumentFrequencyTable {
    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn get(&self, word: &str) -> usize {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// All words ordered by descending document frequency, ties broken by
    /// lexicographic order.
    pub fn ranking(&self) -> Vec<(&str, usize)> {
        let mut ranked: Vec<_> = self.counts.iter().map(|(w, &c)| (w.as_str(), c)).collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked
    }

    /// The `n` highest-ranked words.
    pub fn top(&self, n: usize) -> Vec<String> {
        self.ranking().into_iter().take(n).map(|(w, _)| w.to_owned()).collect()
    }
}

pub fn document_frequencies(docs: &[TokenizedDocument]) -> DocumentFrequencyTable {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for w in unique {
            *counts.entry(w.to_owned()).or_default() += 1;
        }
    }
    DocumentFrequencyTable {
        counts,
        num_docs: docs.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VocabScheme {
    Unfiltered,
    FilteredLemma,
    ProjectedSurface,
}

impl fmt::Display for VocabScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VocabScheme::Unfiltered => "unfiltered",
            VocabScheme::FilteredLemma => "filtered-lemma",
            VocabScheme::ProjectedSurface => "projected-surface",
        })
    }
}

impl FromStr for VocabScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unfiltered" => Ok(VocabScheme::Unfiltered),
            "filtered-lemma" => Ok(VocabScheme::FilteredLemma),
            "projected-surface" => Ok(VocabScheme::ProjectedSurface),
            _ => Err(Error::InvalidArgument(format!("unknown vocabulary scheme {s:?}"))),
        }
    }
}

/// Dense word ↔ id map. Ids run `0..len()` in ranking order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    df: Vec<usize>,
    index: HashMap<String, usize>,
    scheme: VocabScheme,
    /// Words removed from the top of the ranking (filtered scheme only).
    dropped: Vec<String>,
}

impl Vocabulary {
    pub fn new(words: Vec<String>, df: Vec<usize>, scheme: VocabScheme) -> Result<Self> {
        if words.len() != df.len() {
            return Err(Error::InvalidArgument("words and df lengths differ".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(Self {
            words,
            df,
            index,
            scheme,
            dropped: Vec::new(),
        })
    }

    fn from_ranked<'a>(ranked: impl Iterator<Item = (&'a str, usize)>, scheme: VocabScheme) -> Self {
        let (words, df): (Vec<String>, Vec<usize>) = ranked.map(|(w, c)| (w.to_owned(), c)).unzip();
        Self::new(words, df, scheme).expect("ranking yields unique words")
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn df(&self, id: usize) -> usize {
        self.df[id]
    }

    pub fn scheme(&self) -> VocabScheme {
        self.scheme
    }

    pub fn dropped(&self) -> &[String] {
        &self.dropped
    }

    /// Writes `id<TAB>word<TAB>df` lines, ids ascending from 0.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (i, (word, df)) in self.words.iter().zip(&self.df).enumerate() {
            writeln!(w, "{i}\t{word}\t{df}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, scheme: VocabScheme) -> Result<Self> {
        let path = path.as_ref();
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut words = Vec::new();
        let mut df = Vec::new();
        for (i, line) in content.lines().enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = |msg: &str| Error::parse(path, i + 1, msg);
            if fields.len() != 3 {
                return Err(bad("expected `id<TAB>word<TAB>df`"));
            }
            let id: usize = fields[0].parse().map_err(|_| bad("bad id"))?;
            if id != words.len() {
                return Err(bad("ids must ascend densely from 0"));
            }
            words.push(fields[1].to_owned());
            df.push(fields[2].parse().map_err(|_| bad("bad document frequency"))?);
        }
        Self::new(words, df, scheme)
    }
}

/// The `n` most frequent words by document frequency.
pub fn build_unfiltered_vocab(df: &DocumentFrequencyTable, n: usize) -> Result<Vocabulary> {
    if n == 0 {
        return Err(Error::InvalidArgument("vocabulary size must be >= 1".into()));
    }
    Ok(Vocabulary::from_ranked(df.ranking().into_iter().take(n), VocabScheme::Unfiltered))
}

/// Drops the `skip` most frequent words and keeps the next `n`.
pub fn build_filtered_lemma_vocab(
    df: &DocumentFrequencyTable,
    skip: usize,
    n: usize,
) -> Result<Vocabulary> {
    if n == 0 {
        return Err(Error::InvalidArgument("vocabulary size must be >= 1".into()));
    }
    let ranking = df.ranking();
    if skip >= ranking.len() {
        log::warn!(
            "skipping the top {skip} words leaves nothing of a {}-word ranking",
            ranking.len()
        );
    }
    let dropped = ranking.iter().take(skip).map(|(w, _)| (*w).to_owned()).collect();
    let mut vocab =
        Vocabulary::from_ranked(ranking.into_iter().skip(skip).take(n), VocabScheme::FilteredLemma);
    vocab.dropped = dropped;
    Ok(vocab)
}

/// Maps a lemma vocabulary onto every surface form in `surface_docs` whose
/// lemma it contains, then removes both top-frequency lists. The result is
/// ordered by surface document frequency and is not size-capped.
pub fn project_lemma_vocab_to_surface(
    lemma_vocab: &Vocabulary,
    lexicon: &LemmaLexicon,
    surface_docs: &[TokenizedDocument],
    lemma_top: &[String],
    surface_top: &[String],
) -> Vocabulary {
    let excluded: HashSet<&str> = lemma_top
        .iter()
        .chain(surface_top)
        .map(String::as_str)
        .collect();
    let surface_df = document_frequencies(surface_docs);
    let ranked = surface_df
        .ranking()
        .into_iter()
        .filter(|(w, _)| !excluded.contains(w) && lemma_vocab.contains(lexicon.lemmatize(w)));
    Vocabulary::from_ranked(ranked, VocabScheme::ProjectedSurface)
}

/// A bag of vocabulary ids, stored as `(id, count)` pairs sorted by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedDocument {
    pub doc_id: String,
    pub terms: Vec<(usize, u32)>,
}

impl EncodedDocument {
    pub fn from_ids(doc_id: impl Into<String>, ids: impl IntoIterator<Item = usize>) -> Self {
        let mut bag: BTreeMap<usize, u32> = BTreeMap::new();
        for id in ids {
            *bag.entry(id).or_default() += 1;
        }
        Self {
            doc_id: doc_id.into(),
            terms: bag.into_iter().collect(),
        }
    }

    /// Total token count.
    pub fn len(&self) -> usize {
        self.terms.iter().map(|&(_, c)| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn count(&self, id: usize) -> u32 {
        self.terms
            .binary_search_by_key(&id, |&(i, _)| i)
            .map(|p| self.terms[p].1)
            .unwrap_or(0)
    }
}

/// Maps in-vocabulary tokens to ids and drops out-of-vocabulary tokens.
/// Documents left empty are dropped.
pub fn encode_documents(docs: &[TokenizedDocument], vocab: &Vocabulary) -> Vec<EncodedDocument> {
    let encoded: Vec<EncodedDocument> = docs
        .iter()
        .map(|d| EncodedDocument::from_ids(d.doc_id.clone(), d.tokens.iter().filter_map(|t| vocab.id(t))))
        .filter(|d| !d.is_empty())
        .collect();
    let dropped = docs.len() - encoded.len();
    if dropped > 0 {
        log::info!("dropped {dropped} documents with no in-vocabulary tokens");
    }
    encoded
}

/// Writes one `doc_id<TAB>id:count id:count ...` line per document.
pub fn write_encoded(path: impl AsRef<Path>, docs: &[EncodedDocument]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for doc in docs {
        let terms: Vec<String> = doc.terms.iter().map(|(i, c)| format!("{i}:{c}")).collect();
        writeln!(w, "{}\t{}", doc.doc_id, terms.join(" ")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_encoded(path: impl AsRef<Path>) -> Result<Vec<EncodedDocument>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let bad = |msg: &str| Error::parse(path, i + 1, msg);
        let (doc_id, rest) = line.split_once('\t').ok_or_else(|| bad("expected `doc_id<TAB>terms`"))?;
        let mut terms = Vec::new();
        for pair in rest.split(' ').filter(|p| !p.is_empty()) {
            let (id, count) = pair.split_once(':').ok_or_else(|| bad("expected `id:count`"))?;
            let id: usize = id.parse().map_err(|_| bad("bad id"))?;
            let count: u32 = count.parse().map_err(|_| bad("bad count"))?;
            if terms.last().is_some_and(|&(prev, _)| prev >= id) {
                return Err(bad("ids must be strictly ascending"));
            }
            terms.push((id, count));
        }
        docs.push(EncodedDocument {
            doc_id: doc_id.to_owned(),
            terms,
        });
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, words: &[&str]) -> TokenizedDocument {
        TokenizedDocument::new(id, words.iter().map(|s| s.to_string()).collect())
    }

    fn df_of(pairs: &[(&str, usize)]) -> DocumentFrequencyTable {
        DocumentFrequencyTable {
            counts: pairs.iter().map(|&(w, c)| (w.to_owned(), c)).collect(),
            num_docs: pairs.iter().map(|p| p.1).max().unwrap_or(0),
        }
    }

    #[test]
    fn df_counts_documents_not_tokens() {
        let df = document_frequencies(&[doc("1", &["a", "a", "b"]), doc("2", &["b", "c"])]);
        assert_eq!((df.get("a"), df.get("b"), df.get("c")), (1, 2, 1));
        assert_eq!(df.num_docs(), 2);

        let empty = document_frequencies(&[]);
        assert!(empty.is_empty());
        assert_eq!(empty.num_docs(), 0);

        let df = document_frequencies(&[doc("1", &["x"; 5])]);
        assert_eq!(df.get("x"), 1);
    }

    #[test]
    fn unfiltered_takes_top_n_with_lexicographic_ties() {
        let df = df_of(&[("a", 3), ("b", 2), ("c", 1)]);
        assert_eq!(build_unfiltered_vocab(&df, 2).unwrap().words(), ["a", "b"]);
        assert_eq!(build_unfiltered_vocab(&df, 10).unwrap().len(), 3);

        let df = df_of(&[("b", 1), ("a", 1)]);
        assert_eq!(build_unfiltered_vocab(&df, 1).unwrap().words(), ["a"]);
        assert!(build_unfiltered_vocab(&df, 0).is_err());
    }

    #[test]
    fn filtered_skips_top_ranks() {
        let df = df_of(&[("a", 7), ("b", 6), ("c", 5), ("d", 4), ("e", 3), ("f", 2), ("g", 1)]);
        let v = build_filtered_lemma_vocab(&df, 2, 3).unwrap();
        assert_eq!(v.words(), ["c", "d", "e"]);
        assert_eq!(v.dropped(), ["a", "b"]);
        assert_eq!(v.scheme(), VocabScheme::FilteredLemma);

        let v0 = build_filtered_lemma_vocab(&df, 0, 4).unwrap();
        assert_eq!(v0.words(), build_unfiltered_vocab(&df, 4).unwrap().words());

        assert!(build_filtered_lemma_vocab(&df, 7, 3).unwrap().is_empty());
        assert!(build_filtered_lemma_vocab(&df, 20, 3).unwrap().is_empty());
    }

    #[test]
    fn projection_collects_all_surface_forms() {
        let lemma_vocab =
            Vocabulary::new(vec!["пес".into()], vec![2], VocabScheme::FilteredLemma).unwrap();
        let lex: LemmaLexicon = [("псы", "пес"), ("псам", "пес"), ("пес", "пес")].into_iter().collect();
        let surface = vec![doc("1", &["псы", "кот"]), doc("2", &["псам", "пес"])];
        let v = project_lemma_vocab_to_surface(&lemma_vocab, &lex, &surface, &[], &[]);
        let mut words = v.words().to_vec();
        words.sort();
        assert_eq!(words, ["пес", "псам", "псы"]);
        assert_eq!(v.scheme(), VocabScheme::ProjectedSurface);

        let empty = Vocabulary::new(vec![], vec![], VocabScheme::FilteredLemma).unwrap();
        assert!(project_lemma_vocab_to_surface(&empty, &lex, &surface, &[], &[]).is_empty());

        let v = project_lemma_vocab_to_surface(&lemma_vocab, &lex, &surface, &[], &["псы".into()]);
        assert!(!v.contains("псы"));
        let v = project_lemma_vocab_to_surface(&lemma_vocab, &lex, &surface, &["пес".into()], &[]);
        assert!(!v.contains("пес"));
        assert!(v.contains("псам"));
    }

    #[test]
    fn encoding_counts_and_drops() {
        let vocab = Vocabulary::new(vec!["a".into()], vec![1], VocabScheme::Unfiltered).unwrap();
        let enc = encode_documents(&[doc("1", &["a", "x", "a"]), doc("2", &["x", "y"])], &vocab);
        assert_eq!(enc.len(), 1);
        assert_eq!(enc[0].terms, vec![(0, 2)]);

        let vocab = Vocabulary::new(vec!["a".into(), "b".into()], vec![1, 1], VocabScheme::Unfiltered).unwrap();
        let enc = encode_documents(&[doc("1", &["b", "a", "b"])], &vocab);
        assert_eq!(enc[0].len(), 3);
        assert_eq!(enc[0].count(1), 2);
    }

    #[test]
    fn vocabulary_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let df = df_of(&[("слово", 3), ("b", 2)]);
        let v = build_unfiltered_vocab(&df, 5).unwrap();
        let path = dir.path().join("vocab.tsv");
        v.save(&path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "0\tслово\t3\n1\tb\t2\n");
        assert_eq!(Vocabulary::load(&path, VocabScheme::Unfiltered).unwrap(), v);
    }

    proptest! {
        #[test]
        fn encoded_file_roundtrip(bags in proptest::collection::vec(proptest::collection::vec(0usize..50, 1..30), 0..10)) {
            let docs: Vec<_> = bags.into_iter().enumerate()
                .map(|(i, ids)| EncodedDocument::from_ids(format!("d{i}"), ids)).collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("corpus.enc");
            write_encoded(&path, &docs).unwrap();
            prop_assert_eq!(read_encoded(&path).unwrap(), docs);
        }

        #[test]
        fn scheme_size_and_prefix_properties(
            counts in proptest::collection::vec(1usize..30, 1..60),
            n in 1usize..40,
            skip in 0usize..20,
        ) {
            let pairs: Vec<(String, usize)> = counts.iter().enumerate().map(|(i, &c)| (format!("w{i}"), c)).collect();
            let df = DocumentFrequencyTable {
                counts: pairs.iter().cloned().collect(),
                num_docs: 30,
            };
            let unf = build_unfiltered_vocab(&df, n).unwrap();
            prop_assert_eq!(unf.len(), n.min(df.len()));

            let filt = build_filtered_lemma_vocab(&df, skip, n).unwrap();
            let full: Vec<String> = df.ranking().into_iter().map(|(w, _)| w.to_owned()).collect();
            let joined: Vec<String> = filt.dropped().iter().chain(filt.words()).cloned().collect();
            prop_assert_eq!(&full[..joined.len()], &joined[..]);
        }

        #[test]
        fn encode_preserves_multiplicity(tokens in proptest::collection::vec(0usize..12, 0..40)) {
            let vocab = Vocabulary::new((0..6).map(|i| format!("w{i}")).collect(), vec![1; 6], VocabScheme::Unfiltered).unwrap();
            let d = TokenizedDocument::new("d", tokens.iter().map(|t| format!("w{t}")).collect());
            let enc = encode_documents(std::slice::from_ref(&d), &vocab);
            let in_vocab = tokens.iter().filter(|&&t| t < 6).count();
            prop_assert_eq!(enc.first().map_or(0, EncodedDocument::len), in_vocab);
            for id in 0..6 {
                let expected = tokens.iter().filter(|&&t| t == id).count() as u32;
                prop_assert_eq!(enc.first().map_or(0, |e| e.count(id)), expected);
            }
        }
    }
}
