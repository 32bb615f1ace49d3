use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use songwell_core::dialogue::VariableId;
use songwell_core::llm::{ChatTurn, Speaker};
use songwell_core::session::{SessionState, TurnError};

use crate::service::{ServiceError, SessionService, TurnReply};

type Shared = Arc<SessionService>;

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateSession {
    pub user_name: String,
}

/// Either a new message or a retry of the saved one.
#[derive(Debug, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum TurnRequest {
    Text { text: String },
    Retry { retry: bool },
}

/// Version of the request and response shapes served here.
pub const API_VERSION: &str = "1";

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SessionBody<'a> {
    id: &'a str,
    awaiting_retry: bool,
    /// Variables of the current step still to be learned.
    unfilled: Vec<VariableId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    last_agent_turn: Option<&'a ChatTurn>,
    session: &'a SessionState,
    #[serde(skip_serializing_if = "Option::is_none")]
    reply: Option<&'a ChatTurn>,
}

fn session_body(svc: &SessionService, id: &str, state: &SessionState, reply: Option<&ChatTurn>) -> serde_json::Value {
    let unfilled = match svc.engine().registry().step(&state.current_step) {
        Ok(step) => step.required.iter().copied().filter(|v| !state.vars.is_filled(*v)).collect(),
        Err(_) => Vec::new(),
    };
    let last_agent_turn = state.history.iter().rev().find(|t| t.speaker == Speaker::Agent);
    json!(SessionBody { id, awaiting_retry: state.awaiting_retry(), unfilled, last_agent_turn, session: state, reply })
}

fn reply_response(svc: &SessionService, status: StatusCode, reply: &TurnReply) -> Response {
    (status, Json(session_body(svc, &reply.id, &reply.state, Some(&reply.reply)))).into_response()
}

fn error_body(kind: &str, message: String) -> serde_json::Value {
    json!({ "error": { "kind": kind, "message": message } })
}

/// Wraps service errors so they render as JSON with a fitting status.
pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let message = self.0.to_string();
        let (status, kind) = match &self.0 {
            ServiceError::NotFound(_) | ServiceError::SongNotFound { .. } => (StatusCode::NOT_FOUND, "not_found"),
            ServiceError::Busy(_) => (StatusCode::CONFLICT, "busy"),
            ServiceError::Rejected(e) => match e {
                TurnError::EmptyText | TurnError::EmptyName => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
                TurnError::Ended => (StatusCode::CONFLICT, "ended"),
                TurnError::AwaitingRetry => (StatusCode::CONFLICT, "awaiting_retry"),
                _ => (StatusCode::CONFLICT, "nothing_to_retry"),
            },
            ServiceError::TurnFailed { state, .. } => {
                let mut body = error_body("turn_failed", message);
                body["session"] = json!(&**state);
                body["awaitingRetry"] = json!(state.awaiting_retry());
                return (StatusCode::BAD_GATEWAY, Json(body)).into_response();
            }
            ServiceError::OpenFailed(_) => (StatusCode::BAD_GATEWAY, "open_failed"),
            ServiceError::Store(_) | ServiceError::Fold { .. } => {
                tracing::error!(error = %message, "storage failure");
                (StatusCode::INTERNAL_SERVER_ERROR, "storage")
            }
        };
        (status, Json(error_body(kind, message))).into_response()
    }
}

/// Runs blocking engine work off the async executor.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ApiError> {
    match tokio::task::spawn_blocking(f).await {
        Ok(result) => result.map_err(ApiError),
        Err(e) => std::panic::resume_unwind(e.into_panic()),
    }
}

async fn create(State(svc): State<Shared>, Json(body): Json<CreateSession>) -> Result<Response, ApiError> {
    let worker = svc.clone();
    let reply = blocking(move || worker.create(&body.user_name)).await?;
    Ok(reply_response(&svc, StatusCode::CREATED, &reply))
}

async fn turn(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(body): Json<TurnRequest>,
) -> Result<Response, ApiError> {
    let worker = svc.clone();
    let reply = blocking(move || match body {
        TurnRequest::Text { text } => worker.turn(&id, &text),
        TurnRequest::Retry { retry: true } => worker.retry(&id),
        TurnRequest::Retry { retry: false } => Err(ServiceError::Rejected(TurnError::EmptyText)),
    })
    .await?;
    Ok(reply_response(&svc, StatusCode::OK, &reply))
}

async fn end(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let worker = svc.clone();
    let reply = blocking(move || worker.end(&id)).await?;
    Ok(reply_response(&svc, StatusCode::OK, &reply))
}

async fn show(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let worker = svc.clone();
    let lookup = id.clone();
    let state = blocking(move || worker.get(&lookup)).await?;
    Ok(Json(session_body(&svc, &id, &state, None)).into_response())
}

async fn viz(State(svc): State<Shared>, Path((id, index)): Path<(String, usize)>) -> Result<Response, ApiError> {
    let doc = svc.viz(&id, index)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], doc).into_response())
}

async fn transcript(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let text = blocking(move || svc.transcript(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "apiVersion": API_VERSION }))
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/turns", post(turn))
        .route("/sessions/{id}/end", post(end))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/sessions/{id}/songs/{index}/viz", get(viz))
        .with_state(service)
}
