//! Blind word-intrusion annotation over HTTP. Tasks are served one at a
//! time in a seeded order per session; the answer key never leaves the
//! server.

mod error;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use lemlda::intrusion::{load_tasks, DetectionReport, IntrusionTask};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

pub use error::{Result, ServiceError};
use session::{Progress, SessionState, Submitted};

/// Shown to the annotator when a session starts.
pub const INSTRUCTIONS: &str = "Each screen lists six words. Five of them were taken from one topic and one was \
planted from elsewhere. Pick the planted word. Decide by meaning alone: word endings, grammatical forms and \
other surface similarities between words are not evidence either way. Each topic is shown once and answers \
cannot be changed.";

pub struct AppState {
    tasks: Vec<IntrusionTask>,
    index: HashMap<String, usize>,
    sessions_dir: PathBuf,
    label: String,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionState>>>>,
}

impl AppState {
    /// Loads tasks with their key and reopens every session found under
    /// `data_dir`.
    pub fn open(tasks_path: &Path, key_path: &Path, data_dir: &Path, label: impl Into<String>) -> Result<Self> {
        let tasks = load_tasks(tasks_path, key_path)?;
        Self::from_tasks(tasks, data_dir, label)
    }

    pub fn from_tasks(tasks: Vec<IntrusionTask>, data_dir: &Path, label: impl Into<String>) -> Result<Self> {
        let index = tasks.iter().enumerate().map(|(i, t)| (t.task_id.clone(), i)).collect();
        let sessions_dir = data_dir.join("sessions");
        std::fs::create_dir_all(&sessions_dir)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&sessions_dir)? {
            let path = entry?.path();
            if path.join(session::SESSION_FILE).exists() {
                let state = SessionState::open(path)?;
                let id = state.session().session_id.clone();
                log::info!("resumed session {id} at {}/{}", state.progress().done, state.progress().total);
                sessions.insert(id, Arc::new(Mutex::new(state)));
            }
        }
        Ok(Self {
            tasks,
            index,
            sessions_dir,
            label: label.into(),
            sessions: Mutex::new(sessions),
        })
    }

    fn task(&self, task_id: &str) -> Option<&IntrusionTask> {
        self.index.get(task_id).map(|&i| &self.tasks[i])
    }

    async fn session(&self, id: &str) -> Result<Arc<Mutex<SessionState>>> {
        self.sessions
            .lock()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("session {id}")))
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub annotator_id: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub instructions: &'static str,
    pub progress: Progress,
}

/// The blind view of one task, or the completion marker.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum NextTask {
    Task {
        task_id: String,
        words: Vec<String>,
        progress: Progress,
    },
    Completed {
        completed: bool,
        responses: usize,
        progress: Progress,
    },
}

#[derive(Debug, Deserialize)]
pub struct SubmitResponse {
    pub task_id: String,
    pub chosen_index: usize,
}

#[derive(Debug, Serialize)]
pub struct Acknowledged {
    pub ok: bool,
    pub duplicate: bool,
    pub progress: Progress,
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/next", get(next_task))
        .route("/api/sessions/{id}/responses", post(submit_response))
        .route("/api/sessions/{id}/report", get(report))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionCreated>)> {
    if req.annotator_id.trim().is_empty() {
        return Err(ServiceError::InvalidArgument("annotator_id is empty".into()));
    }
    let session_id = uuid::Uuid::new_v4().simple().to_string();
    let ids: Vec<String> = state.tasks.iter().map(|t| t.task_id.clone()).collect();
    let s = SessionState::create(state.sessions_dir.join(&session_id), session_id.clone(), req.annotator_id, req.seed, &ids)?;
    let progress = s.progress();
    state.sessions.lock().await.insert(session_id.clone(), Arc::new(Mutex::new(s)));
    log::info!("created session {session_id}");
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id,
            instructions: INSTRUCTIONS,
            progress,
        }),
    ))
}

async fn next_task(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<NextTask>> {
    let session = state.session(&id).await?;
    let s = session.lock().await;
    let progress = s.progress();
    Ok(Json(match s.current() {
        Some(task_id) => {
            let view = state.task(task_id).expect("session tasks come from the task file").view();
            NextTask::Task {
                task_id: view.task_id,
                words: view.words,
                progress,
            }
        }
        None => NextTask::Completed {
            completed: true,
            responses: s.responses().len(),
            progress,
        },
    }))
}

async fn submit_response(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<SubmitResponse>,
) -> Result<Json<Acknowledged>> {
    let session = state.session(&id).await?;
    let task = state
        .task(&req.task_id)
        .ok_or_else(|| ServiceError::NotFound(format!("task {}", req.task_id)))?;
    let mut s = session.lock().await;
    let outcome = s.submit(&req.task_id, req.chosen_index, task.num_choices(), Utc::now())?;
    Ok(Json(Acknowledged {
        ok: true,
        duplicate: outcome == Submitted::Duplicate,
        progress: s.progress(),
    }))
}

async fn report(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<DetectionReport>> {
    let session = state.session(&id).await?;
    let s = session.lock().await;
    Ok(Json(s.report(&state.tasks, &state.label)?))
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub tasks: PathBuf,
    pub key: PathBuf,
    pub data_dir: PathBuf,
    pub addr: SocketAddr,
    pub static_dir: Option<PathBuf>,
    pub label: String,
}

pub async fn serve(config: ServerConfig) -> Result<()> {
    let state = Arc::new(AppState::open(&config.tasks, &config.key, &config.data_dir, config.label.clone())?);
    let app = router(state, config.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
