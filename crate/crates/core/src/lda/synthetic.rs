use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardUniform};

use crate::error::{Error, Result};
use crate::vocab::EncodedDocument;

/// A corpus drawn from the LDA generative process, with the latent
/// variables kept for checking recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub true_topics: Vec<Vec<f64>>,
    pub proportions: Vec<Vec<f64>>,
    pub docs: Vec<EncodedDocument>,
    /// Word ids of each document in generation order.
    pub tokens: Vec<Vec<usize>>,
    /// Topic label of each token, aligned with `tokens`.
    pub assignments: Vec<Vec<usize>>,
}

/// Draws from a Dirichlet in log space: `Gamma(a) = Gamma(a+1)·U^(1/a)`,
/// which stays finite for very small concentrations.
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Vec<f64> {
    let logs: Vec<f64> = alpha
        .iter()
        .map(|&a| {
            let g: f64 = Gamma::new(a + 1.0, 1.0).expect("positive shape").sample(rng);
            let u: f64 = rng.sample(StandardUniform);
            g.ln() + u.max(f64::MIN_POSITIVE).ln() / a
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Forward-samples `num_docs` documents of `doc_len` tokens:
/// `θ_d ~ Dirichlet(α)`, `z ~ Discrete(θ_d)`, `w ~ Discrete(β_z)`.
pub fn sample_synthetic_corpus(
    true_topics: &[Vec<f64>],
    alpha: &[f64],
    num_docs: usize,
    doc_len: usize,
    seed: u64,
) -> Result<SyntheticCorpus> {
    if true_topics.is_empty() || true_topics.len() != alpha.len() {
        return Err(Error::InvalidArgument(format!(
            "{} topics but {} prior entries",
            true_topics.len(),
            alpha.len()
        )));
    }
    if doc_len == 0 {
        return Err(Error::InvalidArgument("doc_len must be >= 1".into()));
    }
    if alpha.iter().any(|a| !(*a > 0.0)) {
        return Err(Error::InvalidArgument("alpha entries must be positive".into()));
    }
    let vocab_size = true_topics[0].len();
    let mut topic_dists = Vec::with_capacity(true_topics.len());
    for (k, row) in true_topics.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if row.len() != vocab_size || (sum - 1.0).abs() > 1e-9 || row.iter().any(|p| *p < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "topic {k} is not a distribution over {vocab_size} words"
            )));
        }
        topic_dists.push(WeightedIndex::new(row).expect("valid weights"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = SyntheticCorpus {
        true_topics: true_topics.to_vec(),
        proportions: Vec::with_capacity(num_docs),
        docs: Vec::with_capacity(num_docs),
        tokens: Vec::with_capacity(num_docs),
        assignments: Vec::with_capacity(num_docs),
    };
    for d in 0..num_docs {
        let theta = sample_dirichlet(alpha, &mut rng);
        let mixture = WeightedIndex::new(&theta).expect("proportions sum to one");
        let mut tokens = Vec::with_capacity(doc_len);
        let mut labels = Vec::with_capacity(doc_len);
        for _ in 0..doc_len {
            let z = mixture.sample(&mut rng);
            tokens.push(topic_dists[z].sample(&mut rng));
            labels.push(z);
        }
        corpus.docs.push(EncodedDocument::from_ids(format!("doc{d:06}"), tokens.iter().copied()));
        corpus.proportions.push(theta);
        corpus.tokens.push(tokens);
        corpus.assignments.push(labels);
    }
    Ok(corpus)
}
