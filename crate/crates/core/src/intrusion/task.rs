use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::lda::LdaModel;

pub const DEFAULT_TOPIC_WORDS: usize = 5;
pub const DEFAULT_EXCLUSION_DEPTH: usize = 50;

/// One topic's top words plus a planted intruder, in display order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntrusionTask {
    pub task_id: String,
    pub topic_id: usize,
    pub words: Vec<String>,
    pub intruder_index: usize,
}

/// The annotator-facing part of a task; carries no answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskView {
    pub task_id: String,
    pub topic_id: usize,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerKeyEntry {
    pub task_id: String,
    pub intruder_index: usize,
}

impl IntrusionTask {
    pub fn view(&self) -> TaskView {
        TaskView {
            task_id: self.task_id.clone(),
            topic_id: self.topic_id,
            words: self.words.clone(),
        }
    }

    pub fn key(&self) -> AnswerKeyEntry {
        AnswerKeyEntry {
            task_id: self.task_id.clone(),
            intruder_index: self.intruder_index,
        }
    }

    pub fn intruder(&self) -> &str {
        &self.words[self.intruder_index]
    }

    /// Number of words a choice may index into (m + 1).
    pub fn num_choices(&self) -> usize {
        self.words.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntrusionSettings {
    /// Topic words shown per task.
    pub m: usize,
    /// Intruders are never drawn from this many of the target topic's own
    /// top words.
    pub exclusion_depth: usize,
    pub seed: u64,
}

impl Default for IntrusionSettings {
    fn default() -> Self {
        Self {
            m: DEFAULT_TOPIC_WORDS,
            exclusion_depth: DEFAULT_EXCLUSION_DEPTH,
            seed: 0,
        }
    }
}

pub fn task_id(topic: usize) -> String {
    format!("topic-{topic:04}")
}

/// Builds one task per topic. The intruder is drawn uniformly from the
/// union of the other topics' top-`m` words, minus the target topic's top
/// `exclusion_depth` words; then all `m + 1` words are shuffled.
pub fn build_intrusion_tasks(
    model: &LdaModel,
    words: &[String],
    settings: &IntrusionSettings,
) -> Result<Vec<IntrusionTask>> {
    let m = settings.m;
    if m == 0 || m >= words.len() {
        return Err(Error::InvalidArgument(format!(
            "m = {m} needs a vocabulary larger than m (have {})",
            words.len()
        )));
    }
    let depth = settings.exclusion_depth.max(m).min(words.len());
    let k_topics = model.num_topics();
    let top: Vec<Vec<usize>> = (0..k_topics)
        .map(|k| model.top_word_ids(words, k, m))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut tasks = Vec::with_capacity(k_topics);
    for k in 0..k_topics {
        let excluded: HashSet<usize> = model.top_word_ids(words, k, depth)?.into_iter().collect();
        let candidates: Vec<usize> = top
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .flat_map(|(_, ids)| ids.iter().copied())
            .filter(|id| !excluded.contains(id))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if candidates.is_empty() {
            return Err(Error::NoIntruder { topic: k });
        }
        let intruder = candidates[rng.random_range(0..candidates.len())];
        let mut display: Vec<usize> = top[k].clone();
        display.push(intruder);
        display.shuffle(&mut rng);
        let intruder_index = display.iter().position(|&id| id == intruder).expect("intruder placed");
        tasks.push(IntrusionTask {
            task_id: task_id(k),
            topic_id: k,
            words: display.into_iter().map(|id| words[id].clone()).collect(),
            intruder_index,
        });
    }
    Ok(tasks)
}

/// Writes the blind task file and the answer key as two JSON Lines files
/// in the same task order.
pub fn write_tasks(tasks_path: impl AsRef<Path>, key_path: impl AsRef<Path>, tasks: &[IntrusionTask]) -> Result<()> {
    let views: Vec<TaskView> = tasks.iter().map(IntrusionTask::view).collect();
    let keys: Vec<AnswerKeyEntry> = tasks.iter().map(IntrusionTask::key).collect();
    write_jsonl(tasks_path, &views)?;
    write_jsonl(key_path, &keys)
}

pub fn read_task_views(path: impl AsRef<Path>) -> Result<Vec<TaskView>> {
    read_jsonl(path)
}

pub fn read_answer_key(path: impl AsRef<Path>) -> Result<Vec<AnswerKeyEntry>> {
    read_jsonl(path)
}

/// Reattaches answers to blind tasks.
pub fn join_answer_key(views: Vec<TaskView>, key: &[AnswerKeyEntry]) -> Result<Vec<IntrusionTask>> {
    let answers: HashMap<&str, usize> = key.iter().map(|e| (e.task_id.as_str(), e.intruder_index)).collect();
    views
        .into_iter()
        .map(|v| {
            let intruder_index = *answers
                .get(v.task_id.as_str())
                .ok_or_else(|| Error::InvalidArgument(format!("answer key has no entry for {}", v.task_id)))?;
            if intruder_index >= v.words.len() {
                return Err(Error::InvalidArgument(format!(
                    "intruder index {intruder_index} out of range for {}",
                    v.task_id
                )));
            }
            Ok(IntrusionTask {
                task_id: v.task_id,
                topic_id: v.topic_id,
                words: v.words,
                intruder_index,
            })
        })
        .collect()
}

pub fn load_tasks(tasks_path: impl AsRef<Path>, key_path: impl AsRef<Path>) -> Result<Vec<IntrusionTask>> {
    join_answer_key(read_task_views(tasks_path)?, &read_answer_key(key_path)?)
}
