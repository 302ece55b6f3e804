//! Session state kept on disk: `session.json` holds the serving order and
//! `responses.jsonl` is an append-only log. The cursor is always rebuilt by
//! replaying the log against the order.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use lemlda::intrusion::{score_detection_rate, AnnotationResponse, DetectionReport, IntrusionTask};
use lemlda::jsonl::{read_json, read_jsonl, write_json};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

pub const SESSION_FILE: &str = "session.json";
pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSession {
    pub session_id: String,
    pub annotator_id: String,
    pub seed: u64,
    pub task_order: Vec<String>,
    pub cursor: usize,
    pub completed: bool,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

/// Outcome of a submission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Submitted {
    Recorded,
    /// Identical to an earlier submission; nothing was written.
    Duplicate,
}

/// Seeded permutation of the task ids.
pub fn task_order(task_ids: &[String], seed: u64) -> Vec<String> {
    let mut order = task_ids.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

#[derive(Debug)]
pub struct SessionState {
    dir: PathBuf,
    session: AnnotationSession,
    responses: Vec<AnnotationResponse>,
}

impl SessionState {
    pub fn create(dir: PathBuf, session_id: String, annotator_id: String, seed: u64, task_ids: &[String]) -> Result<Self> {
        fs::create_dir_all(&dir)?;
        let session = AnnotationSession {
            session_id,
            annotator_id,
            seed,
            task_order: task_order(task_ids, seed),
            cursor: 0,
            completed: task_ids.is_empty(),
            created_at: Utc::now(),
        };
        fs::File::create(dir.join(RESPONSES_FILE))?;
        let state = Self {
            dir,
            session,
            responses: Vec::new(),
        };
        state.save()?;
        Ok(state)
    }

    /// Loads a session and replays its response log.
    pub fn open(dir: PathBuf) -> Result<Self> {
        let mut session: AnnotationSession = read_json(dir.join(SESSION_FILE))?;
        let log_path = dir.join(RESPONSES_FILE);
        let responses: Vec<AnnotationResponse> = if log_path.exists() { read_jsonl(&log_path)? } else { Vec::new() };
        for (i, r) in responses.iter().enumerate() {
            if session.task_order.get(i) != Some(&r.task_id) {
                return Err(ServiceError::Conflict(format!(
                    "{}: response {} is for {} but the session expects {:?}",
                    log_path.display(),
                    i + 1,
                    r.task_id,
                    session.task_order.get(i)
                )));
            }
        }
        if session.cursor != responses.len() {
            log::warn!(
                "session {}: stored cursor {} replaced by replayed {}",
                session.session_id,
                session.cursor,
                responses.len()
            );
        }
        session.cursor = responses.len();
        session.completed = session.cursor == session.task_order.len();
        Ok(Self { dir, session, responses })
    }

    pub fn session(&self) -> &AnnotationSession {
        &self.session
    }

    pub fn responses(&self) -> &[AnnotationResponse] {
        &self.responses
    }

    pub fn progress(&self) -> Progress {
        Progress {
            done: self.session.cursor,
            total: self.session.task_order.len(),
        }
    }

    /// Id of the next task to serve, or `None` when complete.
    pub fn current(&self) -> Option<&str> {
        self.session.task_order.get(self.session.cursor).map(String::as_str)
    }

    pub fn remaining(&self) -> &[String] {
        &self.session.task_order[self.session.cursor..]
    }

    /// Records a choice for the current task. `num_choices` bounds the index.
    pub fn submit(&mut self, task_id: &str, chosen_index: usize, num_choices: usize, now: DateTime<Utc>) -> Result<Submitted> {
        if let Some(prev) = self.responses.iter().find(|r| r.task_id == task_id) {
            return if prev.chosen_index == chosen_index {
                Ok(Submitted::Duplicate)
            } else {
                Err(ServiceError::Conflict(format!("{task_id} was already answered")))
            };
        }
        let Some(current) = self.current() else {
            return Err(ServiceError::Conflict("session is complete".into()));
        };
        if current != task_id {
            return Err(ServiceError::Conflict(format!("expected a response to {current}, got {task_id}")));
        }
        if chosen_index >= num_choices {
            return Err(ServiceError::InvalidArgument(format!(
                "chosen_index {chosen_index} out of range 0..{num_choices}"
            )));
        }
        let response = AnnotationResponse {
            task_id: task_id.to_owned(),
            chosen_index,
            annotator_id: self.session.annotator_id.clone(),
            timestamp: now,
        };
        let mut line = serde_json::to_string(&response).map_err(lemlda::Error::from)?;
        line.push('\n');
        let mut log = OpenOptions::new().append(true).create(true).open(self.dir.join(RESPONSES_FILE))?;
        log.write_all(line.as_bytes())?;
        log.sync_data()?;

        self.responses.push(response);
        self.session.cursor += 1;
        self.session.completed = self.session.cursor == self.session.task_order.len();
        self.save()?;
        Ok(Submitted::Recorded)
    }

    /// Scores a completed session and stores the report beside it.
    pub fn report(&self, tasks: &[IntrusionTask], label: &str) -> Result<DetectionReport> {
        if !self.session.completed {
            return Err(ServiceError::Incomplete {
                remaining: self.remaining().to_vec(),
            });
        }
        let report = score_detection_rate(tasks, &self.responses, label)?;
        write_json(self.dir.join(REPORT_FILE), &report)?;
        Ok(report)
    }

    fn save(&self) -> Result<()> {
        let tmp = self.dir.join(format!("{SESSION_FILE}.tmp"));
        write_json(&tmp, &self.session)?;
        fs::rename(&tmp, self.dir.join(SESSION_FILE))?;
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}
