//! HTTP JSON API for live preference elicitation.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cred_core::harness::{AnswerOutcome, PendingQuery, SessionStatus, SessionStore};
use cred_core::{EnvironmentSpec, Error, Generator, Label, TrajectoryRecord};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn bad_request(msg: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": msg.into() }),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownSession(_) => StatusCode::NOT_FOUND,
            Error::StaleQuery { .. } | Error::Session(_) => StatusCode::CONFLICT,
            Error::Config(_) | Error::Json(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = match &e {
            Error::StaleQuery { pending, .. } => json!({ "error": e.to_string(), "pending_query_id": pending }),
            _ => json!({ "error": e.to_string() }),
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{e}");
        }
        ApiError { status, body }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// What the frontend renders for a pending query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryView {
    pub query_id: String,
    pub iteration: usize,
    pub env: EnvironmentSpec,
    pub traj_a: TrajectoryRecord,
    pub traj_b: TrajectoryRecord,
    pub info_gain: f64,
    pub generator: Generator,
}

impl From<PendingQuery> for QueryView {
    fn from(p: PendingQuery) -> Self {
        QueryView {
            query_id: p.query_id,
            iteration: p.iteration,
            env: p.env,
            traj_a: p.query.traj_a,
            traj_b: p.query.traj_b,
            info_gain: p.query.info_gain,
            generator: p.query.generator,
        }
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, Error> + Send + 'static,
) -> Result<T, ApiError> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: json!({ "error": format!("worker failed: {e}") }),
        }),
    }
}

async fn create_session(State(store): State<Arc<SessionStore>>) -> Result<(StatusCode, Json<Value>), ApiError> {
    let state = blocking(move || store.create()).await?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": state.id }))))
}

async fn get_query(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<Value> {
    let pending = blocking(move || store.pending(&id)).await?;
    Ok(Json(match pending {
        Some(p) => serde_json::to_value(QueryView::from(p)).map_err(Error::from)?,
        None => json!({ "status": SessionStatus::Complete }),
    }))
}

fn parse_label(v: &Value) -> Result<Label, ApiError> {
    match v {
        Value::String(s) => s.parse().map_err(|e: Error| ApiError::bad_request(e.to_string())),
        Value::Number(n) => match n.as_i64() {
            Some(1) => Ok(Label::PreferA),
            Some(-1) => Ok(Label::PreferB),
            _ => Err(ApiError::bad_request(format!("label must be +1 or -1, got {n}"))),
        },
        _ => Err(ApiError::bad_request("label must be \"+1\" or \"-1\"")),
    }
}

async fn post_answer(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Result<Json<Value>, axum::extract::rejection::JsonRejection>,
) -> ApiResult<Value> {
    let Json(body) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let query_id = body
        .get("query_id")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::bad_request("missing query_id"))?
        .to_string();
    let label = parse_label(body.get("label").ok_or_else(|| ApiError::bad_request("missing label"))?)?;
    let outcome = blocking(move || store.answer(&id, &query_id, label)).await?;
    let value = match outcome {
        AnswerOutcome::Next {
            next_query,
            belief_summary,
        } => json!({
            "next_query": QueryView::from(next_query),
            "belief_summary": belief_summary,
        }),
        AnswerOutcome::Complete { status, belief_summary } => json!({
            "status": status,
            "belief_summary": belief_summary,
        }),
    };
    Ok(Json(value))
}

async fn get_belief(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<Value> {
    let summary = blocking(move || store.belief(&id)).await?;
    Ok(Json(serde_json::to_value(summary).map_err(Error::from)?))
}

pub fn router(store: Arc<SessionStore>) -> Router {
    let static_dir = store.config().static_dir.clone();
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/query", get(get_query))
        .route("/sessions/{id}/answer", post(post_answer))
        .route("/sessions/{id}/belief", get(get_belief))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(store: Arc<SessionStore>, bind: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store)).await?;
    Ok(())
}
