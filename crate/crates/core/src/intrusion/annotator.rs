//! Automated stand-ins for a human annotator, used to exercise the
//! evaluation pipeline without a person in the loop.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::score::AnnotationResponse;
use super::task::TaskView;
use crate::corpus::TokenizedDocument;
use crate::error::{Error, Result};
use crate::vocab::EncodedDocument;

/// Smoothing added to joint probabilities before taking logs.
const PMI_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnotatorPolicy {
    /// Picks the word least associated with the others under known topics.
    Oracle,
    /// Picks the word with the lowest mean pairwise PMI.
    PmiCoherence,
    UniformRandom,
}

impl AnnotatorPolicy {
    fn name(self) -> &'static str {
        match self {
            AnnotatorPolicy::Oracle => "oracle",
            AnnotatorPolicy::PmiCoherence => "pmi-coherence",
            AnnotatorPolicy::UniformRandom => "uniform-random",
        }
    }
}

impl fmt::Display for AnnotatorPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnnotatorPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(AnnotatorPolicy::Oracle),
            "pmi-coherence" => Ok(AnnotatorPolicy::PmiCoherence),
            "uniform-random" => Ok(AnnotatorPolicy::UniformRandom),
            _ => Err(Error::InvalidArgument(format!("unknown annotator policy {s:?}"))),
        }
    }
}

/// Known topic-word distributions keyed by word.
#[derive(Debug, Clone)]
pub struct TopicAffinity {
    /// Per word, its normalized weight in each topic.
    profiles: HashMap<String, Vec<f64>>,
}

impl TopicAffinity {
    pub fn new(topics: &[Vec<f64>], words: &[String]) -> Result<Self> {
        if topics.iter().any(|row| row.len() != words.len()) {
            return Err(Error::InvalidArgument("topic rows must cover every word".into()));
        }
        let profiles = words
            .iter()
            .enumerate()
            .map(|(v, w)| {
                let col: Vec<f64> = topics.iter().map(|row| row[v]).collect();
                let total: f64 = col.iter().sum();
                let profile = if total > 0.0 {
                    col.iter().map(|x| x / total).collect()
                } else {
                    col
                };
                (w.clone(), profile)
            })
            .collect();
        Ok(Self { profiles })
    }

    fn affinity(&self, a: &str, b: &str) -> Option<f64> {
        let (pa, pb) = (self.profiles.get(a)?, self.profiles.get(b)?);
        Some(pa.iter().zip(pb).map(|(x, y)| x * y).sum())
    }
}

/// Document co-occurrence counts for pointwise mutual information.
#[derive(Debug, Clone, Default)]
pub struct CooccurrenceTable {
    num_docs: usize,
    /// Sorted document indices containing each word.
    postings: HashMap<String, Vec<u32>>,
}

impl CooccurrenceTable {
    pub fn from_tokenized(docs: &[TokenizedDocument]) -> Self {
        let mut postings: HashMap<String, Vec<u32>> = HashMap::new();
        for (d, doc) in docs.iter().enumerate() {
            for tok in &doc.tokens {
                let list = postings.entry(tok.clone()).or_default();
                if list.last() != Some(&(d as u32)) {
                    list.push(d as u32);
                }
            }
        }
        Self {
            num_docs: docs.len(),
            postings,
        }
    }

    pub fn from_encoded(docs: &[EncodedDocument], words: &[String]) -> Result<Self> {
        let mut postings: HashMap<String, Vec<u32>> = HashMap::new();
        for (d, doc) in docs.iter().enumerate() {
            for &(id, _) in &doc.terms {
                let word = words.get(id).ok_or_else(|| {
                    Error::InvalidArgument(format!("word id {id} outside a vocabulary of {}", words.len()))
                })?;
                postings.entry(word.clone()).or_default().push(d as u32);
            }
        }
        Ok(Self {
            num_docs: docs.len(),
            postings,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn doc_frequency(&self, word: &str) -> usize {
        self.postings.get(word).map_or(0, Vec::len)
    }

    pub fn co_frequency(&self, a: &str, b: &str) -> usize {
        let (Some(pa), Some(pb)) = (self.postings.get(a), self.postings.get(b)) else {
            return 0;
        };
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < pa.len() && j < pb.len() {
            match pa[i].cmp(&pb[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    /// `log (p(a,b) + ε) / (p(a) p(b))` over documents. `None` when either
    /// word never occurs.
    pub fn pmi(&self, a: &str, b: &str) -> Option<f64> {
        let d = self.num_docs as f64;
        let (fa, fb) = (self.doc_frequency(a), self.doc_frequency(b));
        if fa == 0 || fb == 0 {
            return None;
        }
        let joint = self.co_frequency(a, b) as f64 / d;
        Some(((joint + PMI_EPSILON) / ((fa as f64 / d) * (fb as f64 / d))).ln())
    }
}

/// What a non-random annotator consults.
#[derive(Debug, Clone)]
pub enum Reference {
    TrueTopics(TopicAffinity),
    Cooccurrence(CooccurrenceTable),
}

#[derive(Debug, Clone)]
pub struct SimulatedAnnotator {
    pub policy: AnnotatorPolicy,
    pub reference: Option<Reference>,
    pub annotator_id: String,
    pub seed: u64,
    /// Timestamp stamped on every response, fixed so outputs reproduce.
    pub timestamp: DateTime<Utc>,
}

impl SimulatedAnnotator {
    pub fn new(policy: AnnotatorPolicy, reference: Option<Reference>, seed: u64) -> Self {
        Self {
            policy,
            reference,
            annotator_id: format!("simulated-{policy}"),
            seed,
            timestamp: DateTime::UNIX_EPOCH,
        }
    }

    /// Chooses a word for `task`. Random choices are seeded per task id, so
    /// the answer for a task does not depend on which other tasks exist.
    pub fn respond(&self, task: &TaskView) -> Result<AnnotationResponse> {
        let n = task.words.len();
        if n == 0 {
            return Err(Error::InvalidArgument(format!("task {} has no words", task.task_id)));
        }
        let chosen_index = match (self.policy, &self.reference) {
            (AnnotatorPolicy::UniformRandom, _) => self.task_rng(&task.task_id).random_range(0..n),
            (AnnotatorPolicy::Oracle, Some(Reference::TrueTopics(topics))) => {
                self.least_associated(task, |a, b| topics.affinity(a, b))?
            }
            (AnnotatorPolicy::PmiCoherence, Some(Reference::Cooccurrence(table))) => {
                self.least_associated(task, |a, b| table.pmi(a, b))?
            }
            (policy, _) => {
                return Err(Error::InvalidArgument(format!(
                    "{policy} annotator needs a matching reference"
                )))
            }
        };
        Ok(AnnotationResponse {
            task_id: task.task_id.clone(),
            chosen_index,
            annotator_id: self.annotator_id.clone(),
            timestamp: self.timestamp,
        })
    }

    pub fn respond_all(&self, tasks: &[TaskView]) -> Result<Vec<AnnotationResponse>> {
        tasks.iter().map(|t| self.respond(t)).collect()
    }

    fn task_rng(&self, task_id: &str) -> ChaCha8Rng {
        let digest = Sha256::new()
            .chain_update(self.seed.to_le_bytes())
            .chain_update(task_id.as_bytes())
            .finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    /// Index of the word with the lowest mean association to the rest;
    /// the earliest index wins ties.
    fn least_associated(
        &self,
        task: &TaskView,
        assoc: impl Fn(&str, &str) -> Option<f64>,
    ) -> Result<usize> {
        let words = &task.words;
        let mut best = (0, f64::INFINITY);
        for (i, w) in words.iter().enumerate() {
            let mut total = 0.0;
            for (j, other) in words.iter().enumerate() {
                if i != j {
                    total += assoc(w, other).ok_or_else(|| Error::UnknownWord {
                        policy: self.policy.name(),
                        word: if assoc(w, w).is_none() { w.clone() } else { other.clone() },
                    })?;
                }
            }
            let mean = total / (words.len() - 1).max(1) as f64;
            if mean < best.1 {
                best = (i, mean);
            }
        }
        Ok(best.0)
    }
}
