//! JSON over HTTP. Errors are `{code, message}` with a matching status.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::error::TriageError;
use crate::model::{Resolution, Status, TriageLabel};
use crate::store::Store;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatusBody {
    pub item_id: String,
    pub status: Status,
}

pub struct ApiError(StatusCode, ErrorBody);

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError(
            status,
            ErrorBody {
                code: code.into(),
                message: message.into(),
            },
        )
    }
}

impl From<TriageError> for ApiError {
    fn from(e: TriageError) -> Self {
        let status = match &e {
            TriageError::UnknownItem(_) => StatusCode::NOT_FOUND,
            TriageError::DuplicateLabel { .. }
            | TriageError::ItemSetMismatch
            | TriageError::UnresolvedItems(_)
            | TriageError::NotInDisagreement(_) => StatusCode::CONFLICT,
            TriageError::InvalidLabel(_) | TriageError::EmptyInput(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status.is_server_error() {
            log::error!("{e}");
        }
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Deserialize)]
struct LabelerQuery {
    labeler: Option<String>,
}

fn require_labeler(q: LabelerQuery) -> ApiResult<String> {
    q.labeler.filter(|l| !l.trim().is_empty()).ok_or_else(|| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "MissingLabeler",
            "query parameter `labeler` is required",
        )
    })
}

async fn next_item(
    State(store): State<Arc<Store>>,
    Query(q): Query<LabelerQuery>,
) -> ApiResult<Response> {
    let labeler = require_labeler(q)?;
    Ok(match store.next_for(&labeler) {
        Some(view) => Json(view).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn get_item(
    State(store): State<Arc<Store>>,
    Path(id): Path<String>,
    Query(q): Query<LabelerQuery>,
) -> ApiResult<Response> {
    Ok(Json(store.view(&id, q.labeler.as_deref())?).into_response())
}

async fn post_label(
    State(store): State<Arc<Store>>,
    body: Result<Json<TriageLabel>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(label) = body?;
    let item_id = label.item_id.clone();
    let status = store.submit_label(label)?;
    Ok((StatusCode::CREATED, Json(StatusBody { item_id, status })).into_response())
}

async fn disagreements(State(store): State<Arc<Store>>) -> Response {
    Json(store.disagreements()).into_response()
}

async fn post_resolution(
    State(store): State<Arc<Store>>,
    body: Result<Json<Resolution>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(res) = body?;
    let item_id = res.item_id.clone();
    let status = store.resolve(res)?;
    Ok((StatusCode::CREATED, Json(StatusBody { item_id, status })).into_response())
}

async fn kappa(State(store): State<Arc<Store>>) -> ApiResult<Response> {
    Ok(Json(store.kappa()?).into_response())
}

async fn summary(State(store): State<Arc<Store>>) -> ApiResult<Response> {
    Ok(Json(store.summary()?).into_response())
}

/// Routes over `store`; unmatched paths fall through to files under
/// `static_dir` when given.
pub fn router(store: Arc<Store>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/items/next", get(next_item))
        .route("/items/{id}", get(get_item))
        .route("/labels", post(post_label))
        .route("/disagreements", get(disagreements))
        .route("/resolutions", post(post_resolution))
        .route("/kappa", get(kappa))
        .route("/summary", get(summary))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route")
        }),
    }
}

/// Serve until ctrl-c.
pub async fn serve(
    addr: SocketAddr,
    store: Arc<Store>,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!(
        "triage service listening on http://{}",
        listener.local_addr()?
    );
    axum::serve(listener, router(store, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
