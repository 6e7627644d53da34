//! HTTP front end for one-shot tracking of drawn trajectories.

mod state;
mod track;

pub use state::{AppState, ArtifactInfo, Loaded, SystemEntry};
pub use track::{
    track, ApiError, PreprocessingInfo, PreprocessingOverrides, Series, TrackRequest, TrackResponse,
};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use std::future::Future;
use tower_http::cors::{Any, CorsLayer};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            let id = uuid::Uuid::new_v4().to_string();
            log::error!("request failed [{id}]: {}", self.message);
            return (
                self.status,
                Json(json!({"error": "internal error", "diagnostic_id": id})),
            )
                .into_response();
        }
        (self.status, Json(json!({"error": self.message}))).into_response()
    }
}

async fn track_handler(State(state): State<AppState>, body: Bytes) -> Response {
    let req: TrackRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            return (
                StatusCode::BAD_REQUEST,
                Json(json!({"error": e.to_string()})),
            )
                .into_response()
        }
    };
    let loaded = state.snapshot();
    let config = state.config.clone();
    match tokio::task::spawn_blocking(move || track(&loaded, &config, &req)).await {
        Ok(Ok(resp)) => Json(resp).into_response(),
        Ok(Err(e)) => e.into_response(),
        Err(e) => ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: format!("worker failed: {e}"),
        }
        .into_response(),
    }
}

fn health_body(state: &AppState) -> serde_json::Value {
    let loaded = state.snapshot();
    json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "artifacts": loaded.artifacts.iter().map(|a| json!({"path": a.path, "sha256": a.sha256})).collect::<Vec<_>>(),
    })
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(health_body(&state))
}

async fn artifacts(State(state): State<AppState>) -> Json<serde_json::Value> {
    let loaded = state.snapshot();
    let systems: Vec<_> = loaded
        .systems
        .iter()
        .map(|(name, e)| {
            json!({
                "name": name,
                "sample_time": e.system.sample_time(),
                "strategies": e.registry.iter().map(|(n, s)| json!({"name": n, "method": s.method()})).collect::<Vec<_>>(),
            })
        })
        .collect();
    Json(json!({"systems": systems, "artifacts": loaded.artifacts}))
}

async fn reload(State(state): State<AppState>) -> Response {
    let s = state.clone();
    match tokio::task::spawn_blocking(move || s.reload()).await {
        Ok(Ok(())) => Json(health_body(&state)).into_response(),
        Ok(Err(e)) => ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: format!("reload failed: {e}"),
        }
        .into_response(),
        Err(e) => ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: e.to_string(),
        }
        .into_response(),
    }
}

async fn not_found() -> Response {
    (StatusCode::NOT_FOUND, Json(json!({"error": "not found"}))).into_response()
}

pub fn router(state: AppState) -> Router {
    let cors = match state
        .config
        .cors_origin
        .as_deref()
        .map(HeaderValue::from_str)
    {
        Some(Ok(origin)) => CorsLayer::new().allow_origin(origin),
        _ => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    Router::new()
        .route("/api/track", post(track_handler))
        .route("/api/health", get(health))
        .route("/api/artifacts", get(artifacts))
        .route("/api/reload", post(reload))
        .fallback(not_found)
        .layer(cors)
        .with_state(state)
}

/// Serves until `shutdown` resolves, then lets in-flight requests finish.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
