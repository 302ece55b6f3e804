#![allow(dead_code)]

use std::path::Path;

use lemlda::corpus::{lemmatize_corpus, LemmaLexicon, TokenizedDocument};
use lemlda::lda::{sample_dirichlet, sample_synthetic_corpus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Topics concentrated on disjoint blocks of `vocab_size / k` words: each
/// row puts `in_block` of its mass on its own block (Dirichlet(1) weights)
/// and spreads the rest uniformly over the whole vocabulary.
pub fn block_topics(k: usize, vocab_size: usize, in_block: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = vocab_size / k;
    (0..k)
        .map(|t| {
            let weights = sample_dirichlet(&vec![1.0; block], &mut rng);
            let mut row = vec![(1.0 - in_block) / vocab_size as f64; vocab_size];
            for (i, w) in weights.iter().enumerate() {
                row[t * block + i] += in_block * w;
            }
            let total: f64 = row.iter().sum();
            row.iter().map(|x| x / total).collect()
        })
        .collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Repeatedly pairs the most similar unmatched (learned, true) topics.
/// Returns the similarity of each matched pair.
pub fn greedy_cosine_matching(learned: &[Vec<f64>], truth: &[Vec<f64>]) -> Vec<f64> {
    let mut pairs: Vec<(f64, usize, usize)> = learned
        .iter()
        .enumerate()
        .flat_map(|(i, l)| truth.iter().enumerate().map(move |(j, t)| (cosine(l, t), i, j)))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut used_l = vec![false; learned.len()];
    let mut used_t = vec![false; truth.len()];
    let mut sims = Vec::new();
    for (s, i, j) in pairs {
        if !used_l[i] && !used_t[j] {
            used_l[i] = true;
            used_t[j] = true;
            sims.push(s);
        }
    }
    sims
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub const BASE_WORDS: usize = 500;
pub const STOP_WORDS: usize = 20;
pub const VARIANTS: [&str; 4] = ["a", "b", "c", "d"];

/// A corpus whose content words carry one of four inflection tags.
pub struct InflectedCorpus {
    pub truth: Vec<Vec<f64>>,
    pub lexicon: LemmaLexicon,
    pub surface: Vec<TokenizedDocument>,
    pub lemma: Vec<TokenizedDocument>,
}

/// Samples `docs` documents of `len` tokens over `k` block topics on 500
/// base words, replaces a `stop_frac` share of tokens with 20 skewed
/// topic-free stop words, and tags every token with a uniformly drawn
/// variant suffix. The lexicon maps each `<base>x<tag>` back to `<base>`.
pub fn inflected_corpus(k: usize, docs: usize, len: usize, in_block: f64, alpha: f64, stop_frac: f64, seed: u64) -> InflectedCorpus {
    let base: Vec<String> = (0..BASE_WORDS)
        .map(|i| format!("w{i:03}"))
        .chain((0..STOP_WORDS).map(|i| format!("s{i:02}")))
        .collect();
    let truth = block_topics(k, BASE_WORDS, in_block, seed);
    let sample = sample_synthetic_corpus(&truth, &vec![alpha; k], docs, len, seed).unwrap();
    let mut lexicon = LemmaLexicon::new();
    for w in &base {
        for v in VARIANTS {
            lexicon.insert(format!("{w}x{v}"), w.clone());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    let surface: Vec<TokenizedDocument> = sample
        .tokens
        .iter()
        .enumerate()
        .map(|(d, toks)| {
            let tokens = toks
                .iter()
                .map(|&id| {
                    let word = if rng.random::<f64>() < stop_frac {
                        let s = (rng.random::<f64>().powi(2) * STOP_WORDS as f64) as usize;
                        &base[BASE_WORDS + s]
                    } else {
                        &base[id]
                    };
                    format!("{word}x{}", VARIANTS[rng.random_range(0..VARIANTS.len())])
                })
                .collect();
            TokenizedDocument::new(format!("d{d:05}"), tokens)
        })
        .collect();
    let (lemma, _) = lemmatize_corpus(&lexicon, &surface);
    InflectedCorpus { truth, lexicon, surface, lemma }
}

/// Writes the corpus as `doc_id<TAB>text` and the lexicon as TSV.
pub fn write_inflected_fixture(c: &InflectedCorpus, dir: &Path) {
    let mut corpus = String::new();
    for d in &c.surface {
        corpus.push_str(&format!("{}\t{}\n", d.doc_id, d.tokens.join(" ")));
    }
    std::fs::write(dir.join("corpus.tsv"), corpus).unwrap();
    let mut entries: Vec<_> = c.lexicon.iter().collect();
    entries.sort();
    let lex: String = entries.iter().map(|(s, l)| format!("{s}\t{l}\n")).collect();
    std::fs::write(dir.join("lexicon.tsv"), lex).unwrap();
}
