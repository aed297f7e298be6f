//! HTTP review service: annotators classify senses, approve or replace
//! examples, edit glosses, and triage merge candidates over a run
//! directory.
//!
//! The decision log is the source of truth. Every accepted decision is
//! appended and fsynced before the in-memory state advances, so a crash
//! never acknowledges a decision it did not persist. Optimistic concurrency
//! conflicts and repeat submissions surface as 409s for the UI to handle.
//!
//! Endpoints: `GET /health`, `GET /tasks`, `GET /tasks/{id}`,
//! `POST /decisions`, `GET /senses`, `GET /synsets`, `GET /export`. When a
//! UI bundle directory is configured it is served at `/`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as AxumPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;
use tokio::sync::RwLock;

use advsense_core::review::{
    append_decision, read_decisions, Applied, DecisionResult, ReviewDecision, ReviewError,
    ReviewState, TaskKind, TaskState,
};
use advsense_core::senses::read_senses;
use advsense_core::synsets::{SynsetLexicon, SynsetParams};
use advsense_core::taxonomy::Taxonomy;
use advsense_core::content_id;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("run directory has no drafted senses at {0}")]
    MissingDrafts(PathBuf),
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error(transparent)]
    Sense(#[from] advsense_core::senses::SenseError),
    #[error(transparent)]
    Synset(#[from] advsense_core::synsets::SynsetError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub struct ServiceConfig {
    pub run_dir: PathBuf,
    pub taxonomy: Taxonomy,
    pub synset_params: SynsetParams,
    /// Directory holding a built UI bundle; served at `/` when present.
    pub ui_dir: Option<PathBuf>,
}

struct AppState {
    review: RwLock<ReviewState>,
    log_path: PathBuf,
    ui_dir: Option<PathBuf>,
}

/// Load review state from a run directory: drafted senses, optional synsets,
/// and the decision log replayed over them.
pub fn load_state(config: &ServiceConfig) -> Result<ReviewState, ServeError> {
    let senses_path = config.run_dir.join("senses.jsonl");
    if !senses_path.exists() {
        return Err(ServeError::MissingDrafts(senses_path));
    }
    let drafts = read_senses(&senses_path)?;
    let synsets_path = config.run_dir.join("synsets.jsonl");
    let synsets = if synsets_path.exists() {
        SynsetLexicon::read_jsonl(&synsets_path)?
    } else {
        SynsetLexicon::new()
    };
    let decisions_path = config.run_dir.join("decisions.jsonl");
    let decisions = if decisions_path.exists() {
        read_decisions(&decisions_path)?
    } else {
        Vec::new()
    };
    Ok(ReviewState::replay(
        drafts,
        synsets,
        &config.taxonomy,
        &config.synset_params,
        decisions,
    )?)
}

pub fn router(config: ServiceConfig) -> Result<Router, ServeError> {
    let state = load_state(&config)?;
    let shared = Arc::new(AppState {
        review: RwLock::new(state),
        log_path: config.run_dir.join("decisions.jsonl"),
        ui_dir: config.ui_dir,
    });
    Ok(Router::new()
        .route("/health", get(health))
        .route("/tasks", get(list_tasks))
        .route("/tasks/{id}", get(get_task))
        .route("/decisions", post(submit_decision))
        .route("/senses", get(list_senses))
        .route("/synsets", get(list_synsets))
        .route("/export", get(export_state))
        .route("/", get(ui_index))
        .route("/ui/{*path}", get(ui_asset))
        .with_state(shared))
}

/// Serve the review API until the process is stopped.
pub async fn serve(config: ServiceConfig, addr: &str) -> Result<(), ServeError> {
    let app = router(config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("review service listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}

struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({ "code": self.code, "message": self.message })),
        )
            .into_response()
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> ApiError {
        let (status, code) = match &e {
            ReviewError::UnknownTask(_) => (StatusCode::NOT_FOUND, "unknown_task"),
            ReviewError::TaskAlreadyDone(_) => (StatusCode::CONFLICT, "task_already_done"),
            ReviewError::RevisionConflict { .. } => (StatusCode::CONFLICT, "revision_conflict"),
            ReviewError::ConflictingDecisionId(_) => {
                (StatusCode::CONFLICT, "conflicting_decision_id")
            }
            ReviewError::InvalidResultType { .. } => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid_result_type")
            }
            ReviewError::InvalidDecision(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid_decision")
            }
            ReviewError::Synset(_) => (StatusCode::UNPROCESSABLE_ENTITY, "synset_error"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Deserialize)]
struct TaskFilter {
    kind: Option<String>,
    state: Option<String>,
    lemma: Option<String>,
    after: Option<String>,
    limit: Option<usize>,
}

async fn list_tasks(
    State(app): State<Arc<AppState>>,
    Query(filter): Query<TaskFilter>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let kind = match &filter.kind {
        None => None,
        Some(k) => Some(
            TaskKind::parse(k)
                .ok_or_else(|| ApiError::bad_request(format!("unknown task kind {k:?}")))?,
        ),
    };
    let state_filter = match &filter.state {
        None => None,
        Some(s) => Some(
            TaskState::parse(s)
                .ok_or_else(|| ApiError::bad_request(format!("unknown task state {s:?}")))?,
        ),
    };
    let limit = filter.limit.unwrap_or(100).min(1000);
    let review = app.review.read().await;
    let tasks = review.list_tasks(
        kind,
        state_filter,
        filter.lemma.as_deref(),
        filter.after.as_deref(),
        limit,
    );
    let next = if tasks.len() == limit {
        tasks.last().map(|t| t.task_id.clone())
    } else {
        None
    };
    Ok(Json(json!({ "tasks": tasks, "next": next })))
}

async fn get_task(
    State(app): State<Arc<AppState>>,
    AxumPath(id): AxumPath<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let review = app.review.read().await;
    match review.task(&id) {
        Some(task) => Ok(Json(json!({ "task": task }))),
        None => Err(ReviewError::UnknownTask(id).into()),
    }
}

#[derive(Deserialize)]
struct DecisionRequest {
    task_id: String,
    task_revision: u64,
    result: DecisionResult,
    #[serde(default)]
    decision_id: Option<String>,
    #[serde(default)]
    actor: Option<String>,
    #[serde(default)]
    note: Option<String>,
}

async fn submit_decision(
    State(app): State<Arc<AppState>>,
    headers: HeaderMap,
    Json(request): Json<DecisionRequest>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let actor = headers
        .get("x-actor")
        .and_then(|v| v.to_str().ok())
        .map(str::to_string)
        .or(request.actor)
        .filter(|a| !a.trim().is_empty())
        .ok_or_else(|| ApiError::bad_request("actor required (x-actor header or body field)"))?;
    // a client-omitted id is derived from content, so a retry of the same
    // submission is idempotent either way
    let decision_id = request.decision_id.unwrap_or_else(|| {
        let result = serde_json::to_string(&request.result).unwrap_or_default();
        format!(
            "d{}",
            content_id(
                "decision",
                &[
                    &request.task_id,
                    &request.task_revision.to_string(),
                    &actor,
                    &result,
                ],
            )
        )
    });
    let decision = ReviewDecision {
        decision_id,
        task_id: request.task_id.clone(),
        actor,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        task_revision: request.task_revision,
        result: request.result,
        note: request.note,
    };

    let mut review = app.review.write().await;
    // validate and apply on a scratch copy, persist, then commit: the log
    // never lags an acknowledged state
    let mut next = review.clone();
    let applied = next.apply(decision.clone())?;
    if applied == Applied::Accepted {
        append_decision(&app.log_path, &decision)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "log_write", e.to_string()))?;
        *review = next;
    }
    let task = review.task(&decision.task_id).cloned();
    let sense = decision
        .task_id
        .split_once(':')
        .map(|(_, sense_id)| sense_id.to_string())
        .and_then(|sense_id| {
            review
                .senses()
                .into_iter()
                .find(|s| s.sense_id == sense_id)
                .cloned()
        });
    Ok(Json(json!({
        "decision_id": decision.decision_id,
        "applied": applied == Applied::Accepted,
        "task": task,
        "sense": sense,
    })))
}

async fn list_senses(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let review = app.review.read().await;
    Json(json!({ "senses": review.senses() }))
}

async fn list_synsets(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let review = app.review.read().await;
    let synsets: Vec<_> = review.synsets().iter().collect();
    Json(json!({ "synsets": synsets }))
}

async fn export_state(State(app): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let review = app.review.read().await;
    Json(serde_json::to_value(review.export()).expect("snapshot serializes"))
}

fn content_type_for(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") => "application/javascript",
        Some("css") => "text/css",
        Some("json" | "map") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        _ => "application/octet-stream",
    }
}

fn serve_file(root: &Path, rel: &str) -> Response {
    let rel = rel.trim_start_matches('/');
    if rel.split('/').any(|part| part == "..") {
        return (StatusCode::BAD_REQUEST, "invalid path").into_response();
    }
    let full = root.join(rel);
    match std::fs::read(&full) {
        Ok(bytes) => (
            StatusCode::OK,
            [(header::CONTENT_TYPE, content_type_for(&full))],
            bytes,
        )
            .into_response(),
        Err(_) => (StatusCode::NOT_FOUND, "not found").into_response(),
    }
}

async fn ui_index(State(app): State<Arc<AppState>>) -> Response {
    match &app.ui_dir {
        Some(dir) => serve_file(dir, "index.html"),
        None => (
            StatusCode::OK,
            [(header::CONTENT_TYPE, "text/html; charset=utf-8")],
            "<!doctype html><title>review service</title>\
             <p>API only: no UI bundle configured. See /tasks, /senses, /export.</p>"
                .to_string(),
        )
            .into_response(),
    }
}

async fn ui_asset(State(app): State<Arc<AppState>>, AxumPath(path): AxumPath<String>) -> Response {
    match &app.ui_dir {
        Some(dir) => serve_file(dir, &path),
        None => (StatusCode::NOT_FOUND, "no UI bundle configured").into_response(),
    }
}
