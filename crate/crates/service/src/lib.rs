//! HTTP front end for estimation, risk matrices and what-if sessions.
//!
//! Every body is produced by `testrisk_core::wire`; handlers only move bytes
//! and hold the session store.

pub mod sessions;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::Router;
use serde::Deserialize;
use testrisk_core::wire::{self, WireError};
use testrisk_core::{load_plan, Scenario};
use tower_http::services::ServeDir;

pub use sessions::{SessionStore, DEFAULT_TTL};

/// Name under which `compare` lists the unmodified base plan.
pub const BASE_SCENARIO: &str = "base";

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    pub session_ttl: Duration,
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct AppState {
    pub sessions: Arc<SessionStore>,
}

impl AppState {
    pub fn new(session_ttl: Duration) -> Self {
        Self { sessions: Arc::new(SessionStore::new(session_ttl)) }
    }
}

impl Default for AppState {
    fn default() -> Self {
        Self::new(DEFAULT_TTL)
    }
}

fn json(status: StatusCode, body: String) -> Response {
    let mut response = (status, body).into_response();
    response.headers_mut().insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    response
}

struct ApiError(WireError);

impl From<WireError> for ApiError {
    fn from(e: WireError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        json(status, self.0.to_json())
    }
}

type ApiResult = Result<Response, ApiError>;

fn ok(body: String) -> ApiResult {
    Ok(json(StatusCode::OK, body))
}

fn unknown_session(id: &str) -> ApiError {
    ApiError(WireError::not_found(
        "unknown-session",
        format!("session '{id}' not found or expired; re-upload the plan"),
    ))
}

async fn health() -> ApiResult {
    ok(wire::health_json())
}

async fn defaults() -> ApiResult {
    ok(wire::defaults_json())
}

async fn estimate(body: Bytes) -> ApiResult {
    let request: wire::EstimateRequest = wire::parse_body(&body)?;
    ok(wire::estimate_json(&request)?)
}

async fn matrix(body: Bytes) -> ApiResult {
    ok(wire::matrix_json(&body)?)
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let document = load_plan(&body).map_err(WireError::from)?;
    let base = document.to_plan::<f64>().map_err(WireError::from)?;
    let id = state.sessions.create(document, base);
    tracing::debug!(session = %id, "session created");
    Ok(json(StatusCode::CREATED, wire::session_created_json(&id)))
}

async fn post_scenario(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let scenario: Scenario = wire::parse_body(&body)?;
    if scenario.name.trim().is_empty() {
        return Err(WireError::new(422, "schema-error", "scenario name must not be empty", Some("name".into())).into());
    }
    if scenario.name == BASE_SCENARIO && !scenario.overrides.is_empty() {
        return Err(WireError::new(
            422,
            "reserved-name",
            format!("'{BASE_SCENARIO}' names the unmodified plan"),
            Some("name".into()),
        )
        .into());
    }
    let handle = state.sessions.get(&id).ok_or_else(|| unknown_session(&id))?;
    let base = handle.read().expect("session lock").base.clone();
    let body = wire::scenario_json(&base, &scenario)?;
    handle.write().expect("session lock").scenarios.insert(scenario.name.clone(), scenario);
    ok(body)
}

#[derive(Debug, Deserialize)]
struct CompareQuery {
    names: Option<String>,
}

async fn compare(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<CompareQuery>,
) -> ApiResult {
    let handle = state.sessions.get(&id).ok_or_else(|| unknown_session(&id))?;
    let session = handle.read().expect("session lock");
    let names: Vec<String> = match &query.names {
        Some(list) => list.split(',').map(str::trim).filter(|n| !n.is_empty()).map(String::from).collect(),
        None => std::iter::once(BASE_SCENARIO.to_string()).chain(session.scenarios.keys().cloned()).collect(),
    };
    let mut scenarios = Vec::with_capacity(names.len());
    for name in names {
        match session.scenarios.get(&name) {
            Some(s) => scenarios.push(s.clone()),
            None if name == BASE_SCENARIO => scenarios.push(Scenario::new(BASE_SCENARIO)),
            None => {
                return Err(WireError::not_found(
                    "unknown-scenario",
                    format!("no scenario named '{name}' in this session"),
                )
                .into())
            }
        }
    }
    ok(wire::compare_json(&session.base, &scenarios)?)
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    if state.sessions.remove(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(unknown_session(&id))
    }
}

async fn api_not_found() -> ApiError {
    ApiError(WireError::not_found("not-found", "no such endpoint"))
}

async fn method_not_allowed() -> ApiError {
    ApiError(WireError::new(405, "method-not-allowed", "method not allowed on this endpoint", None))
}

/// The `/api` routes, without static files.
pub fn api_router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/defaults", get(defaults))
        .route("/estimate", post(estimate))
        .route("/matrix", post(matrix))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", delete(delete_session))
        .route("/sessions/{id}/scenarios", post(post_scenario))
        .route("/sessions/{id}/compare", get(compare))
        .fallback(api_not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state)
}

/// The full application: `/api` plus the UI assets when a directory is given.
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new().nest("/api", api_router(state));
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => app,
    }
}

/// Runs until interrupted.
pub async fn serve(config: ServeConfig) -> std::io::Result<()> {
    let state = AppState::new(config.session_ttl);
    let sweeper = {
        let sessions = state.sessions.clone();
        let period = config.session_ttl.clamp(Duration::from_secs(1), Duration::from_secs(60));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                let evicted = sessions.evict_expired();
                if evicted > 0 {
                    tracing::info!(evicted, "expired sessions removed");
                }
            }
        })
    };
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let result = axum::serve(listener, router(state, config.static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    sweeper.abort();
    result
}
