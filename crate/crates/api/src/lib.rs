//! Versioned HTTP API: project browsing, history, attestation submission,
//! watchlists, the metric registry and an ecosystem summary.

mod error;
mod params;
mod projects;
mod watchlists;

use std::sync::Arc;

use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use crossd_core::MetricRegistry;
use crossd_store::HealthStore;
use sha2::{Digest, Sha256};
use tower_http::cors::{Any, CorsLayer};

pub use error::{ApiError, ApiResult};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<HealthStore>,
    /// Bearer token for write endpoints; writes are refused without one.
    pub write_token: Option<String>,
}

impl AppState {
    pub fn new(store: Arc<HealthStore>, write_token: Option<String>) -> Self {
        AppState { store, write_token }
    }

    pub(crate) fn authorize(&self, headers: &HeaderMap) -> ApiResult<()> {
        let Some(expected) = self.write_token.as_deref().filter(|t| !t.is_empty()) else {
            return Err(ApiError::new(
                StatusCode::UNAUTHORIZED,
                "unauthorized",
                "write endpoints are disabled: no API token configured",
            ));
        };
        let presented = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::trim);
        if presented == Some(expected) {
            Ok(())
        } else {
            Err(ApiError::new(
                StatusCode::UNAUTHORIZED,
                "unauthorized",
                "missing or invalid bearer token",
            ))
        }
    }
}

/// Strong ETag of the bundled registry document.
pub fn registry_etag() -> String {
    let digest = Sha256::digest(MetricRegistry::bundled_json().as_bytes());
    format!("\"{}\"", hex::encode(digest))
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods([Method::GET, Method::POST, Method::DELETE, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE, header::AUTHORIZATION, header::IF_NONE_MATCH])
        .expose_headers([header::ETAG]);

    Router::new()
        .route("/v1/projects", get(projects::list))
        .route("/v1/projects/{*rest}", get(projects::get_nested).post(projects::post_nested))
        .route("/v1/watchlists", axum::routing::post(watchlists::create))
        .route("/v1/watchlists/{id}", get(watchlists::read).delete(watchlists::delete))
        .route("/v1/metrics/definitions", get(definitions))
        .route("/v1/ecosystem/summary", get(summary))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(cors)
        .with_state(state)
}

async fn definitions(headers: HeaderMap) -> Response {
    let etag = registry_etag();
    let matches = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == etag || t.trim() == "*"));
    let etag_value = HeaderValue::from_str(&etag).expect("hex etag is a valid header");
    if matches {
        return (StatusCode::NOT_MODIFIED, [(header::ETAG, etag_value)]).into_response();
    }
    (
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (header::ETAG, etag_value),
        ],
        MetricRegistry::bundled_json(),
    )
        .into_response()
}

async fn summary(State(state): State<AppState>) -> Response {
    Json(state.store.ecosystem_summary()).into_response()
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this endpoint")
}

/// Serves the API until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
