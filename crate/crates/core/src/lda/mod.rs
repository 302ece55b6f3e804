//! Latent Dirichlet allocation with a mean-field variational posterior,
//! trained by stochastic variational inference.

mod bound;
mod infer;
mod snapshot;
pub(crate) mod special;
mod synthetic;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bound::{elbo, elbo_terms, elbo_with_posteriors, ElboTerms};
pub use infer::{
    train, Execution, FullBatch, SufficientStats, Trainer, TrainingLogEntry, DocumentStats,
};
pub use snapshot::SNAPSHOT_MAGIC;
pub use synthetic::{sample_dirichlet, sample_synthetic_corpus, SyntheticCorpus};

/// Shape and scale of the per-entry Gamma draws that initialize λ.
pub const INIT_GAMMA_SHAPE: f64 = 100.0;
pub const INIT_GAMMA_SCALE: f64 = 0.01;

/// Topic-word prior weight used for every configuration.
pub const DEFAULT_ETA: f64 = 0.1;

/// `α_k = 5/K` for every topic.
pub fn make_symmetric_prior(num_topics: usize) -> Result<Vec<f64>> {
    if num_topics == 0 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    Ok(vec![5.0 / num_topics as f64; num_topics])
}

/// `α_1 = 5` and `α_k = 5/(K-1)` for the remaining topics, so the first
/// topic holds half of the total prior mass of 10.
pub fn make_asymmetric_prior(num_topics: usize) -> Result<Vec<f64>> {
    if num_topics < 2 {
        return Err(Error::InvalidArgument(
            "asymmetric prior needs K >= 2".into(),
        ));
    }
    let mut alpha = vec![5.0 / (num_topics - 1) as f64; num_topics];
    alpha[0] = 5.0;
    Ok(alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub num_topics: usize,
    pub eta: f64,
    pub alpha: Vec<f64>,
    /// Forgetting rate of the step-size schedule `ρ_t = (τ₀ + t)^(-κ)`.
    pub kappa: f64,
    pub tau0: f64,
    pub batch_size: usize,
    pub local_max_iters: usize,
    /// Convergence threshold on the mean absolute change of γ.
    pub local_tol: f64,
    pub passes: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// Conventional SVI schedule with a symmetric `5/K` prior.
    pub fn new(num_topics: usize) -> Result<Self> {
        Ok(Self {
            num_topics,
            eta: DEFAULT_ETA,
            alpha: make_symmetric_prior(num_topics)?,
            kappa: 0.7,
            tau0: 64.0,
            batch_size: 256,
            local_max_iters: 100,
            local_tol: 1e-4,
            passes: 5,
            seed: 0,
        })
    }

    pub fn with_alpha(mut self, alpha: Vec<f64>) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.num_topics == 0 {
            return bad("K must be >= 1".into());
        }
        if self.alpha.len() != self.num_topics {
            return bad(format!(
                "alpha has {} entries for K = {}",
                self.alpha.len(),
                self.num_topics
            ));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return bad(format!("alpha entries must be positive, got {a}"));
        }
        if !(self.kappa > 0.5 && self.kappa <= 1.0) {
            return bad(format!("kappa must lie in (0.5, 1], got {}", self.kappa));
        }
        if !(self.tau0 >= 0.0) {
            return bad(format!("tau0 must be >= 0, got {}", self.tau0));
        }
        if self.batch_size == 0 || self.local_max_iters == 0 {
            return bad("batch_size and local_max_iters must be >= 1".into());
        }
        if !(self.local_tol > 0.0) {
            return bad("local_tol must be positive".into());
        }
        Ok(())
    }

    /// Step size for update number `t` (counted from zero), capped at 1.
    pub fn step_size(&self, t: u64) -> f64 {
        (self.tau0 + t as f64).powf(-self.kappa).min(1.0)
    }
}

/// Variational Dirichlet posterior over one document's topic proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentPosterior {
    pub gamma: Vec<f64>,
}

impl DocumentPosterior {
    /// Posterior mean of the topic proportions.
    pub fn expected_proportions(&self) -> Vec<f64> {
        let total: f64 = self.gamma.iter().sum();
        self.gamma.iter().map(|g| g / total).collect()
    }
}

/// Topic parameters λ (K×V, row-major) plus cached `E[log β]` and its
/// exponential.
#[derive(Debug, Clone)]
pub struct LdaModel {
    config: LdaConfig,
    vocab_size: usize,
    lambda: Vec<f64>,
    updates_seen: u64,
    elog_beta: Vec<f64>,
    exp_elog_beta: Vec<f64>,
}

impl PartialEq for LdaModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.vocab_size == other.vocab_size
            && self.updates_seen == other.updates_seen
            && self.lambda == other.lambda
    }
}

impl LdaModel {
    /// Draws every λ entry from Gamma(100, 0.01) using `config.seed`.
    pub fn init(config: LdaConfig, vocab_size: usize) -> Result<Self> {
        config.validate()?;
        if vocab_size == 0 {
            return Err(Error::InvalidArgument("vocabulary size must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let gamma = Gamma::new(INIT_GAMMA_SHAPE, INIT_GAMMA_SCALE).expect("valid gamma parameters");
        let lambda = (0..config.num_topics * vocab_size)
            .map(|_| gamma.sample(&mut rng))
            .collect();
        Self::from_lambda(config, vocab_size, lambda, 0)
    }

    /// Builds a model around explicit topic parameters.
    pub fn from_lambda(
        config: LdaConfig,
        vocab_size: usize,
        lambda: Vec<f64>,
        updates_seen: u64,
    ) -> Result<Self> {
        config.validate()?;
        if lambda.len() != config.num_topics * vocab_size {
            return Err(Error::InvalidArgument(format!(
                "lambda has {} entries, expected {}x{}",
                lambda.len(),
                config.num_topics,
                vocab_size
            )));
        }
        if let Some(x) = lambda.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument(format!("lambda entries must be positive, got {x}")));
        }
        let mut model = Self {
            config,
            vocab_size,
            lambda,
            updates_seen,
            elog_beta: Vec::new(),
            exp_elog_beta: Vec::new(),
        };
        model.refresh();
        Ok(model)
    }

    fn refresh(&mut self) {
        let v = self.vocab_size;
        self.elog_beta = self
            .lambda
            .chunks_exact(v)
            .flat_map(special::dirichlet_expectation)
            .collect();
        self.exp_elog_beta = self.elog_beta.iter().map(|x| x.exp()).collect();
    }

    pub fn config(&self) -> &LdaConfig {
        &self.config
    }

    pub fn num_topics(&self) -> usize {
        self.config.num_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn updates_seen(&self) -> u64 {
        self.updates_seen
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda_row(&self, topic: usize) -> &[f64] {
        &self.lambda[topic * self.vocab_size..(topic + 1) * self.vocab_size]
    }

    pub(crate) fn elog_beta_row(&self, topic: usize) -> &[f64] {
        &self.elog_beta[topic * self.vocab_size..(topic + 1) * self.vocab_size]
    }

    pub(crate) fn exp_elog_beta(&self) -> &[f64] {
        &self.exp_elog_beta
    }

    /// Posterior mean topic-word distributions, one row per topic.
    pub fn expected_topics(&self) -> Vec<Vec<f64>> {
        (0..self.num_topics()).map(|k| self.expected_topic(k)).collect()
    }

    pub fn expected_topic(&self, topic: usize) -> Vec<f64> {
        let row = self.lambda_row(topic);
        let total: f64 = row.iter().sum();
        row.iter().map(|x| x / total).collect()
    }

    /// Ids of the `m` most probable words of `topic`, descending, with ties
    /// broken by the lexicographic order of `words`.
    pub fn top_word_ids(&self, words: &[String], topic: usize, m: usize) -> Result<Vec<usize>> {
        if topic >= self.num_topics() {
            return Err(Error::InvalidArgument(format!(
                "topic {topic} out of range for K = {}",
                self.num_topics()
            )));
        }
        if words.len() != self.vocab_size {
            return Err(Error::InvalidArgument(format!(
                "{} words for a vocabulary of {}",
                words.len(),
                self.vocab_size
            )));
        }
        if m > self.vocab_size {
            return Err(Error::InvalidArgument(format!(
                "m = {m} exceeds the vocabulary size {}",
                self.vocab_size
            )));
        }
        // Row sums are constant within a topic, so ranking λ ranks E[β].
        let row = self.lambda_row(topic);
        let mut ids: Vec<usize> = (0..self.vocab_size).collect();
        let by_weight = |a: &usize, b: &usize| {
            row[*b]
                .total_cmp(&row[*a])
                .then_with(|| words[*a].cmp(&words[*b]))
        };
        if m < ids.len() {
            ids.select_nth_unstable_by(m, by_weight);
            ids.truncate(m);
        }
        ids.sort_unstable_by(by_weight);
        Ok(ids)
    }

    pub fn top_words(&self, words: &[String], topic: usize, m: usize) -> Result<Vec<String>> {
        Ok(self
            .top_word_ids(words, topic, m)?
            .into_iter()
            .map(|i| words[i].clone())
            .collect())
    }
}
