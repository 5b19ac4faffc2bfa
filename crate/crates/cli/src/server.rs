//! HTTP front of the 2AFC experiment.
//!
//! | method | path                          | body / reply                                   |
//! |--------|-------------------------------|------------------------------------------------|
//! | POST   | `/api/session`                | `{observer_id}` → `{session_id, n_trials}`     |
//! | GET    | `/api/session/{id}/trial`     | `{trial_index, left_url, right_url}` or `{status: "complete"}` |
//! | POST   | `/api/session/{id}/response`  | `{trial_index, choice, rt_ms}` → `{status}`    |
//! | GET    | `/api/results`                | statistics document                            |
//! | GET    | `/img/{image_id}`             | image bytes from the image directory           |
//! | GET    | `/`, other paths              | static front-end bundle, or a placeholder page |
//!
//! Errors reply `{error}` with 404 for unknown sessions or files, 409 for
//! out-of-order, duplicate or post-completion responses and 400 for bad input.

use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode, Uri};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ddd_core::experiment::{Choice, Experiment, NextTrial};
use ddd_core::Error;
use serde::Deserialize;
use serde_json::json;

pub struct AppState {
    experiment: Mutex<Experiment>,
    images: PathBuf,
    ui: Option<PathBuf>,
}

impl AppState {
    pub fn new(experiment: Experiment, images: PathBuf, ui: Option<PathBuf>) -> Arc<Self> {
        Arc::new(AppState { experiment: Mutex::new(experiment), images, ui })
    }

    fn experiment(&self) -> MutexGuard<'_, Experiment> {
        // A panic mid-request cannot leave the state half-applied: events are
        // persisted before they are applied.
        self.experiment.lock().unwrap_or_else(|e| e.into_inner())
    }
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Lookup { .. } => StatusCode::NOT_FOUND,
            Error::Sequencing { .. } | Error::DuplicateResponse(_) | Error::SessionComplete => {
                StatusCode::CONFLICT
            }
            Error::InvalidInput(_) | Error::Parse { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError(StatusCode::BAD_REQUEST, e.body_text())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    observer_id: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponseBody {
    trial_index: usize,
    choice: Choice,
    rt_ms: f64,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/session", post(open_session))
        .route("/api/session/{id}/trial", get(next_trial))
        .route("/api/session/{id}/response", post(record_response))
        .route("/api/results", get(results))
        .route("/img/{image_id}", get(image))
        .route("/", get(index))
        .fallback(static_file)
        .with_state(state)
}

pub async fn serve(host: &str, port: u16, state: Arc<AppState>) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("serving on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

async fn open_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<NewSession>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(body) = body?;
    let info = state.experiment().open_session(&body.observer_id)?;
    Ok((StatusCode::CREATED, Json(info)))
}

async fn next_trial(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    Ok(match state.experiment().next_trial(&id)? {
        NextTrial::Trial(payload) => Json(payload).into_response(),
        NextTrial::Complete => Json(json!({ "status": "complete" })).into_response(),
    })
}

async fn record_response(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<ResponseBody>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(body) = body?;
    let ack = state.experiment().record_response(&id, body.trial_index, body.choice, body.rt_ms)?;
    Ok(Json(ack))
}

async fn results(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    Json(state.experiment().results())
}

const IMAGE_EXTENSIONS: [&str; 6] = ["png", "jpg", "jpeg", "ppm", "bmp", "webp"];

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("ppm") => "image/x-portable-pixmap",
        Some("bmp") => "image/bmp",
        Some("webp") => "image/webp",
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

/// Image ids may only use characters that cannot escape the directory.
fn safe_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

async fn send_file(path: PathBuf) -> Result<Response, ApiError> {
    match tokio::fs::read(&path).await {
        Ok(bytes) => Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response()),
        Err(_) => Err(ApiError(StatusCode::NOT_FOUND, "not found".into())),
    }
}

async fn image(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    if !safe_id(&id) {
        return Err(ApiError(StatusCode::BAD_REQUEST, format!("invalid image id {id:?}")));
    }
    let exact = state.images.join(&id);
    if exact.is_file() {
        return send_file(exact).await;
    }
    for ext in IMAGE_EXTENSIONS {
        let candidate = state.images.join(format!("{id}.{ext}"));
        if candidate.is_file() {
            return send_file(candidate).await;
        }
    }
    Err(ApiError(StatusCode::NOT_FOUND, format!("no image {id:?}")))
}

const PLACEHOLDER: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>ddd experiment</title></head>\n<body><p>No front-end bundle configured. Start the server with <code>--ui DIR</code>.</p></body></html>\n";

async fn index(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    match &state.ui {
        Some(dir) => send_file(dir.join("index.html")).await,
        None => Ok(Html(PLACEHOLDER).into_response()),
    }
}

async fn static_file(State(state): State<Arc<AppState>>, uri: Uri) -> Result<Response, ApiError> {
    let not_found = || ApiError(StatusCode::NOT_FOUND, "not found".into());
    let dir = state.ui.as_ref().ok_or_else(not_found)?;
    let rel = Path::new(uri.path().trim_start_matches('/'));
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(ApiError(StatusCode::BAD_REQUEST, "invalid path".into()));
    }
    send_file(dir.join(rel)).await
}
