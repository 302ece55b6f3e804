use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::task::IntrusionTask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationResponse {
    pub task_id: String,
    pub chosen_index: usize,
    pub annotator_id: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicOutcome {
    pub topic_id: usize,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub model_label: String,
    pub detection_rate: f64,
    pub per_topic: Vec<TopicOutcome>,
}

impl DetectionReport {
    pub fn from_outcomes(model_label: impl Into<String>, per_topic: Vec<TopicOutcome>) -> Result<Self> {
        if per_topic.is_empty() {
            return Err(Error::InvalidArgument("a report needs at least one topic".into()));
        }
        let correct = per_topic.iter().filter(|o| o.correct).count();
        Ok(Self {
            model_label: model_label.into(),
            detection_rate: correct as f64 / per_topic.len() as f64,
            per_topic,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.per_topic.len()
    }

    pub fn num_correct(&self) -> usize {
        self.per_topic.iter().filter(|o| o.correct).count()
    }
}

/// Fraction of tasks whose chosen word is the intruder. Requires exactly
/// one response per task.
pub fn score_detection_rate(
    tasks: &[IntrusionTask],
    responses: &[AnnotationResponse],
    model_label: &str,
) -> Result<DetectionReport> {
    let mut by_task: BTreeMap<&str, Vec<&AnnotationResponse>> = BTreeMap::new();
    for r in responses {
        by_task.entry(r.task_id.as_str()).or_default().push(r);
    }
    let known: BTreeSet<&str> = tasks.iter().map(|t| t.task_id.as_str()).collect();
    let missing: Vec<String> = tasks
        .iter()
        .filter(|t| !by_task.contains_key(t.task_id.as_str()))
        .map(|t| t.task_id.clone())
        .collect();
    let duplicate: Vec<String> = by_task
        .iter()
        .filter(|(_, rs)| rs.len() > 1)
        .map(|(id, _)| id.to_string())
        .collect();
    let unknown: Vec<String> = by_task
        .keys()
        .filter(|id| !known.contains(*id))
        .map(|id| id.to_string())
        .collect();
    if !missing.is_empty() || !duplicate.is_empty() || !unknown.is_empty() {
        return Err(Error::ResponseMismatch {
            missing,
            duplicate,
            unknown,
        });
    }
    let outcomes = tasks
        .iter()
        .map(|t| TopicOutcome {
            topic_id: t.topic_id,
            correct: by_task[t.task_id.as_str()][0].chosen_index == t.intruder_index,
        })
        .collect();
    DetectionReport::from_outcomes(model_label, outcomes)
}
