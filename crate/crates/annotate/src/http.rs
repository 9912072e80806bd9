use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::store::{AnnotationStore, StoreError};

pub type SharedStore = Arc<RwLock<AnnotationStore>>;

pub const DEFAULT_LIMIT: usize = 20;
pub const MAX_LIMIT: usize = 1000;

#[derive(Debug, Deserialize)]
pub struct BatchQuery {
    #[serde(default)]
    pub cursor: usize,
    #[serde(default = "default_limit")]
    pub limit: usize,
    pub annotator: String,
}

fn default_limit() -> usize {
    DEFAULT_LIMIT
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VoteRequest {
    pub from: String,
    pub to: String,
    pub annotator: String,
    pub vote: i64,
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    #[serde(default)]
    pub min_net: i64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

struct ApiError(StatusCode, String);

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::UnknownCandidate { .. } => StatusCode::NOT_FOUND,
            StoreError::InvalidVote(_) | StoreError::InvalidAnnotator(_) | StoreError::InvalidLimit => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.0.is_server_error() {
            log::error!("{}", self.1);
        }
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

fn poisoned() -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, "store lock poisoned".into())
}

async fn batch(State(store): State<SharedStore>, Query(q): Query<BatchQuery>) -> Result<Response, ApiError> {
    let limit = q.limit.min(MAX_LIMIT);
    let store = store.read().map_err(|_| poisoned())?;
    Ok(Json(store.next_batch(q.cursor, limit, &q.annotator)?).into_response())
}

async fn vote(State(store): State<SharedStore>, Json(v): Json<VoteRequest>) -> Result<Response, ApiError> {
    // The append is fsynced, so it runs off the async workers.
    let outcome = tokio::task::spawn_blocking(move || {
        let mut store = store.write().map_err(|_| poisoned())?;
        store.record_vote(&v.from, &v.to, &v.annotator, v.vote).map_err(ApiError::from)
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(outcome).into_response())
}

async fn progress(State(store): State<SharedStore>) -> Result<Response, ApiError> {
    let store = store.read().map_err(|_| poisoned())?;
    Ok(Json(store.progress()).into_response())
}

async fn export(State(store): State<SharedStore>, Query(q): Query<ExportQuery>) -> Result<Response, ApiError> {
    let mut body = Vec::new();
    store.read().map_err(|_| poisoned())?.export_curated(q.min_net, &mut body)?;
    Ok(([(header::CONTENT_TYPE, "text/tab-separated-values; charset=utf-8")], body).into_response())
}

/// API routes, plus static files from `static_dir` for everything else.
pub fn router(store: SharedStore, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/batch", get(batch))
        .route("/api/vote", post(vote))
        .route("/api/progress", get(progress))
        .route("/api/export", get(export))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the process is stopped.
pub async fn serve(store: AnnotationStore, addr: std::net::SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let app = router(Arc::new(RwLock::new(store)), static_dir);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
