//! Evidence lower bound of the mean-field posterior, with φ at its optimum
//! given γ and λ.

use super::special::{dirichlet_expectation, ln_gamma, log_sum_exp};
use super::{DocumentPosterior, LdaModel};
use crate::error::{Error, Result};
use crate::vocab::EncodedDocument;

/// The bound split into the part that sums over documents and the part
/// that depends only on the topics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboTerms {
    pub documents: f64,
    pub topics: f64,
}

impl ElboTerms {
    pub fn total(&self) -> f64 {
        self.documents + self.topics
    }
}

/// One document's contribution:
/// `Σ_w n_w log Σ_k exp(E[log θ_k] + E[log β_kw])` plus the Dirichlet
/// terms `E[log p(θ|α)] - E[log q(θ|γ)]`.
pub(crate) fn document_bound(model: &LdaModel, doc: &EncodedDocument, gamma: &[f64]) -> f64 {
    let alpha = &model.config().alpha;
    let elog_theta: Vec<f64> = dirichlet_expectation(gamma).collect();
    let k_topics = model.num_topics();

    let mut score = 0.0;
    for &(id, count) in &doc.terms {
        let logits = (0..k_topics).map(|k| elog_theta[k] + model.elog_beta_row(k)[id]);
        score += count as f64 * log_sum_exp(logits);
    }
    for k in 0..k_topics {
        score += (alpha[k] - gamma[k]) * elog_theta[k] + ln_gamma(gamma[k]) - ln_gamma(alpha[k]);
    }
    score + ln_gamma(alpha.iter().sum()) - ln_gamma(gamma.iter().sum())
}

/// `E[log p(β|η)] - E[log q(β|λ)]` summed over topics.
pub(crate) fn topic_bound(model: &LdaModel) -> f64 {
    let eta = model.config().eta;
    let v = model.vocab_size();
    let mut score = 0.0;
    for k in 0..model.num_topics() {
        let lambda = model.lambda_row(k);
        let elog_beta = model.elog_beta_row(k);
        for (l, e) in lambda.iter().zip(elog_beta) {
            score += (eta - l) * e + ln_gamma(*l);
        }
        score += ln_gamma(eta * v as f64) - v as f64 * ln_gamma(eta) - ln_gamma(lambda.iter().sum());
    }
    score
}

/// Bound terms using supplied per-document posteriors.
pub fn elbo_with_posteriors(
    model: &LdaModel,
    docs: &[EncodedDocument],
    posteriors: &[DocumentPosterior],
) -> Result<ElboTerms> {
    if docs.len() != posteriors.len() {
        return Err(Error::InvalidArgument(format!(
            "{} documents but {} posteriors",
            docs.len(),
            posteriors.len()
        )));
    }
    let documents = docs
        .iter()
        .zip(posteriors)
        .map(|(d, p)| document_bound(model, d, &p.gamma))
        .sum();
    Ok(ElboTerms {
        documents,
        topics: topic_bound(model),
    })
}

/// Bound terms with each document's posterior fitted by `local_step`.
pub fn elbo_terms(model: &LdaModel, docs: &[EncodedDocument]) -> Result<ElboTerms> {
    if docs.is_empty() {
        return Err(Error::InvalidArgument("bound needs at least one document".into()));
    }
    let posteriors = docs
        .iter()
        .map(|d| model.local_step(d).map(|(p, _)| p))
        .collect::<Result<Vec<_>>>()?;
    elbo_with_posteriors(model, docs, &posteriors)
}

pub fn elbo(model: &LdaModel, docs: &[EncodedDocument]) -> Result<f64> {
    elbo_terms(model, docs).map(|t| t.total())
}
