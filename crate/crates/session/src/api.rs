//! HTTP routes. Rankings travel most-preferred-first.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use cmaesig_core::ItemId;

use crate::manager::SessionManager;
use crate::session::{BestView, ItemView, QueryView, Session};
use crate::SessionError;

type AppState = Arc<SessionManager>;

impl IntoResponse for SessionError {
    fn into_response(self) -> Response {
        let status = match &self {
            SessionError::UnknownAlgorithm(_) | SessionError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            SessionError::NotFound(_) | SessionError::UnknownItem(_) => StatusCode::NOT_FOUND,
            SessionError::Conflict { .. } => StatusCode::CONFLICT,
            SessionError::Expired(_) => StatusCode::GONE,
            SessionError::Replay(_) | SessionError::Model(_) | SessionError::Io(_) => {
                log::error!("{self}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let mut body = json!({ "error": self.to_string() });
        if let SessionError::Conflict { expected, .. } = &self {
            body["expected"] = json!(expected);
        }
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub algorithm: Option<String>,
    pub k: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct RankingRequest {
    pub order: Vec<ItemId>,
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct FavoriteRequest {
    pub item_id: ItemId,
}

/// Runs a session operation off the async executor; query generation can take
/// tens of milliseconds.
async fn on_session<T, F>(state: AppState, id: String, f: F) -> Result<T, SessionError>
where
    T: Send + 'static,
    F: FnOnce(&mut Session) -> Result<T, SessionError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || state.with(&id, f))
        .await
        .unwrap_or_else(|e| Err(SessionError::InvalidRequest(format!("request aborted: {e}"))))
}

async fn create(State(state): State<AppState>, Json(req): Json<CreateRequest>) -> Result<Response, SessionError> {
    let id = tokio::task::spawn_blocking(move || state.create(req.algorithm.as_deref(), req.k))
        .await
        .unwrap_or_else(|e| Err(SessionError::InvalidRequest(format!("request aborted: {e}"))))?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id }))).into_response())
}

async fn query(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<QueryView>, SessionError> {
    on_session(state, id, |s| s.next_query()).await.map(Json)
}

async fn ranking(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<RankingRequest>,
) -> Result<Json<serde_json::Value>, SessionError> {
    let iteration = on_session(state, id, move |s| s.submit_ranking(req.order, req.idempotency_key)).await?;
    Ok(Json(json!({ "iteration": iteration })))
}

async fn best(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<BestView>, SessionError> {
    on_session(state, id, |s| Ok(s.predicted_best())).await.map(Json)
}

async fn favorite(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<FavoriteRequest>,
) -> Result<Json<serde_json::Value>, SessionError> {
    let item: ItemView = on_session(state, id, move |s| s.set_favorite(&req.item_id)).await?;
    Ok(Json(json!({ "favorite": item })))
}

async fn event_log(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, SessionError> {
    let body = on_session(state, id, |s| Ok(s.log_lines())).await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/query", get(query))
        .route("/sessions/{id}/ranking", post(ranking))
        .route("/sessions/{id}/best", get(best))
        .route("/sessions/{id}/favorite", post(favorite))
        .route("/sessions/{id}/log", get(event_log))
        .with_state(manager)
}
