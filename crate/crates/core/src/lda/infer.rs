use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::bound::{document_bound, topic_bound};
use super::special::dirichlet_expectation;
use super::{DocumentPosterior, LdaConfig, LdaModel};
use crate::error::{Error, Result};
use crate::vocab::EncodedDocument;

/// Added to the per-word normalizer to avoid division by zero.
const NORMALIZER_FLOOR: f64 = 1e-100;

/// How per-document local steps within a minibatch are scheduled. Both
/// modes combine statistics in batch order and produce identical models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over documents. Falls back to sequential when
    /// the `parallel` feature is disabled.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    fn map<T, F>(self, docs: &[&EncodedDocument], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&EncodedDocument) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => docs.par_iter().map(|d| f(d)).collect(),
            _ => docs.iter().map(|d| f(d)).collect(),
        }
    }
}

/// Expected topic-word counts `Σ_n count·φ` for one document, supported on
/// its own word ids. `values` is K×`ids.len()`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentStats {
    pub ids: Vec<usize>,
    pub values: Vec<f64>,
}

impl DocumentStats {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn get(&self, topic: usize, id: usize) -> f64 {
        let n = self.ids.len();
        self.ids
            .binary_search(&id)
            .map(|j| self.values[topic * n + j])
            .unwrap_or(0.0)
    }
}

/// Dense K×V accumulator of document statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    num_topics: usize,
    vocab_size: usize,
    values: Vec<f64>,
}

impl SufficientStats {
    pub fn zeros(num_topics: usize, vocab_size: usize) -> Self {
        Self {
            num_topics,
            vocab_size,
            values: vec![0.0; num_topics * vocab_size],
        }
    }

    pub fn add(&mut self, doc: &DocumentStats) {
        let n = doc.ids.len();
        for k in 0..self.num_topics {
            let row = &mut self.values[k * self.vocab_size..(k + 1) * self.vocab_size];
            for (j, &id) in doc.ids.iter().enumerate() {
                row[id] += doc.values[k * n + j];
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl LdaModel {
    /// Fits the variational posterior of one document against the current
    /// topics and returns it with the document's expected counts.
    pub fn local_step(&self, doc: &EncodedDocument) -> Result<(DocumentPosterior, DocumentStats)> {
        self.check_document(doc)?;
        Ok(self.fit_document(doc, None))
    }

    pub(crate) fn check_document(&self, doc: &EncodedDocument) -> Result<()> {
        if doc.is_empty() {
            return Err(Error::InvalidArgument(format!("document {:?} is empty", doc.doc_id)));
        }
        if let Some(&(id, _)) = doc.terms.iter().find(|(id, _)| *id >= self.vocab_size) {
            return Err(Error::InvalidArgument(format!(
                "document {:?} has word id {id} outside a vocabulary of {}",
                doc.doc_id, self.vocab_size
            )));
        }
        Ok(())
    }

    /// Alternates the φ and γ coordinate updates, starting from `warm` or
    /// from `α + N/K`. Statistics use φ recomputed from the final γ.
    pub(crate) fn fit_document(
        &self,
        doc: &EncodedDocument,
        warm: Option<&[f64]>,
    ) -> (DocumentPosterior, DocumentStats) {
        let k_topics = self.num_topics();
        let v = self.vocab_size;
        let n = doc.terms.len();
        let ids: Vec<usize> = doc.terms.iter().map(|&(id, _)| id).collect();
        let counts: Vec<f64> = doc.terms.iter().map(|&(_, c)| c as f64).collect();
        let exp_elog_beta = self.exp_elog_beta();
        let beta: Vec<f64> = (0..k_topics)
            .flat_map(|k| ids.iter().map(move |&id| exp_elog_beta[k * v + id]))
            .collect();

        let alpha = &self.config.alpha;
        let mut gamma: Vec<f64> = match warm {
            Some(g) => g.to_vec(),
            None => {
                let share = doc.len() as f64 / k_topics as f64;
                alpha.iter().map(|a| a + share).collect()
            }
        };

        let exp_theta = |gamma: &[f64]| -> Vec<f64> { dirichlet_expectation(gamma).map(f64::exp).collect() };
        let normalizer = |theta: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|j| {
                    (0..k_topics).map(|k| theta[k] * beta[k * n + j]).sum::<f64>() + NORMALIZER_FLOOR
                })
                .collect()
        };

        let mut theta = exp_theta(&gamma);
        let mut phinorm = normalizer(&theta);
        for _ in 0..self.config.local_max_iters {
            let ratio: Vec<f64> = counts.iter().zip(&phinorm).map(|(c, z)| c / z).collect();
            let mut change = 0.0;
            for k in 0..k_topics {
                let dot: f64 = ratio.iter().zip(&beta[k * n..(k + 1) * n]).map(|(r, b)| r * b).sum();
                let updated = alpha[k] + theta[k] * dot;
                change += (updated - gamma[k]).abs();
                gamma[k] = updated;
            }
            theta = exp_theta(&gamma);
            phinorm = normalizer(&theta);
            if change / (k_topics as f64) < self.config.local_tol {
                break;
            }
        }

        let mut values = vec![0.0; k_topics * n];
        for k in 0..k_topics {
            for j in 0..n {
                values[k * n + j] = theta[k] * counts[j] * beta[k * n + j] / phinorm[j];
            }
        }
        (DocumentPosterior { gamma }, DocumentStats { ids, values })
    }

    /// Natural-gradient step with the scheduled rate
    /// `ρ_t = (τ₀ + t)^(-κ)`, scaling batch statistics by `D/|batch|`.
    /// Returns the rate used.
    pub fn global_step(
        &mut self,
        stats: &SufficientStats,
        batch_docs: usize,
        corpus_docs: usize,
    ) -> Result<f64> {
        if batch_docs == 0 || corpus_docs < batch_docs {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= batch_docs ({batch_docs}) <= corpus_docs ({corpus_docs})"
            )));
        }
        let rho = self.config.step_size(self.updates_seen);
        self.global_step_with_rate(stats, corpus_docs as f64 / batch_docs as f64, rho)?;
        Ok(rho)
    }

    /// `λ ← (1-ρ)λ + ρ(η + scale·stats)`.
    pub fn global_step_with_rate(&mut self, stats: &SufficientStats, scale: f64, rho: f64) -> Result<()> {
        if stats.num_topics != self.num_topics() || stats.vocab_size != self.vocab_size {
            return Err(Error::InvalidArgument("statistics shape does not match the model".into()));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidArgument(format!("step size must lie in (0, 1], got {rho}")));
        }
        let eta = self.config.eta;
        for (l, s) in self.lambda.iter_mut().zip(&stats.values) {
            *l = (1.0 - rho) * *l + rho * (eta + scale * s);
        }
        self.updates_seen += 1;
        self.refresh();
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingLogEntry {
    /// Update counter before this step.
    pub t: u64,
    pub rho: f64,
    /// Corpus-scaled bound on the minibatch, computed before the update so
    /// the batch is unseen by the current topics within the pass.
    pub heldout_elbo_estimate: f64,
}

impl TrainingLogEntry {
    pub fn to_line(&self) -> String {
        format!("{}\t{}\t{}", self.t, self.rho, self.heldout_elbo_estimate)
    }
}

/// Minibatch SVI driver.
pub struct Trainer<'a> {
    config: LdaConfig,
    execution: Execution,
    on_batch: Option<Box<dyn FnMut(&TrainingLogEntry) + 'a>>,
}

impl<'a> Trainer<'a> {
    pub fn new(config: LdaConfig) -> Self {
        Self {
            config,
            execution: Execution::default(),
            on_batch: None,
        }
    }

    pub fn execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Registers a callback receiving one entry per minibatch. Computing
    /// the bound estimate costs a pass over λ, so it only runs when set.
    pub fn on_batch(mut self, f: impl FnMut(&TrainingLogEntry) + 'a) -> Self {
        self.on_batch = Some(Box::new(f));
        self
    }

    pub fn fit(mut self, vocab_size: usize, corpus: &[EncodedDocument]) -> Result<LdaModel> {
        if corpus.is_empty() {
            return Err(Error::InvalidArgument("cannot train on an empty corpus".into()));
        }
        let mut model = LdaModel::init(self.config.clone(), vocab_size)?;
        for doc in corpus {
            model.check_document(doc)?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(1);
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        let d = corpus.len();
        let batch_size = self.config.batch_size.min(d);

        for _ in 0..self.config.passes {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch_size) {
                let batch: Vec<&EncodedDocument> = chunk.iter().map(|&i| &corpus[i]).collect();
                let fitted = self.execution.map(&batch, |doc| model.fit_document(doc, None));

                let estimate = self.on_batch.as_ref().map(|_| {
                    let docs: f64 = batch
                        .iter()
                        .zip(&fitted)
                        .map(|(doc, (post, _))| document_bound(&model, doc, &post.gamma))
                        .sum();
                    docs * d as f64 / batch.len() as f64 + topic_bound(&model)
                });

                let mut stats = SufficientStats::zeros(model.num_topics(), vocab_size);
                for (_, doc_stats) in &fitted {
                    stats.add(doc_stats);
                }
                let t = model.updates_seen();
                let rho = model.global_step(&stats, batch.len(), d)?;
                if let (Some(f), Some(est)) = (self.on_batch.as_mut(), estimate) {
                    f(&TrainingLogEntry {
                        t,
                        rho,
                        heldout_elbo_estimate: est,
                    });
                }
            }
        }
        Ok(model)
    }
}

/// Trains with the default execution mode and no log.
pub fn train(config: &LdaConfig, vocab_size: usize, corpus: &[EncodedDocument]) -> Result<LdaModel> {
    Trainer::new(config.clone()).fit(vocab_size, corpus)
}

/// Full-batch coordinate ascent: every step refits all documents (warm
/// started from their previous γ) and then sets `λ = η + stats` exactly.
pub struct FullBatch<'a> {
    model: LdaModel,
    docs: &'a [EncodedDocument],
    gammas: Vec<Option<Vec<f64>>>,
    execution: Execution,
}

impl<'a> FullBatch<'a> {
    pub fn new(model: LdaModel, docs: &'a [EncodedDocument]) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::InvalidArgument("cannot fit an empty corpus".into()));
        }
        for doc in docs {
            model.check_document(doc)?;
        }
        Ok(Self {
            model,
            docs,
            gammas: vec![None; docs.len()],
            execution: Execution::default(),
        })
    }

    pub fn execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    /// Runs one E-step/M-step pair and returns the bound evaluated after
    /// the E-step, before λ changes.
    pub fn step(&mut self) -> f64 {
        let model = &self.model;
        let refs: Vec<&EncodedDocument> = self.docs.iter().collect();
        let indexed: Vec<(usize, &EncodedDocument)> = refs.iter().copied().enumerate().collect();
        let gammas = &self.gammas;
        let fitted: Vec<(DocumentPosterior, DocumentStats)> = match self.execution {
            #[cfg(feature = "parallel")]
            Execution::Parallel => indexed
                .par_iter()
                .map(|&(i, doc)| model.fit_document(doc, gammas[i].as_deref()))
                .collect(),
            _ => indexed
                .iter()
                .map(|&(i, doc)| model.fit_document(doc, gammas[i].as_deref()))
                .collect(),
        };

        let bound = self
            .docs
            .iter()
            .zip(&fitted)
            .map(|(doc, (post, _))| document_bound(model, doc, &post.gamma))
            .sum::<f64>()
            + topic_bound(model);

        let mut stats = SufficientStats::zeros(model.num_topics(), model.vocab_size());
        for (_, s) in &fitted {
            stats.add(s);
        }
        self.model
            .global_step_with_rate(&stats, 1.0, 1.0)
            .expect("statistics built from this model");
        self.gammas = fitted.into_iter().map(|(p, _)| Some(p.gamma)).collect();
        bound
    }

    pub fn model(&self) -> &LdaModel {
        &self.model
    }

    pub fn into_model(self) -> LdaModel {
        self.model
    }
}
