#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, Response, StatusCode};
use axum::Router;
use crossd_api::{router, AppState};
use crossd_core::metrics::ScoringModel;
use crossd_core::time::parse_rfc3339;
use crossd_pipeline::{ingest_fixtures, score_projects};
use crossd_store::HealthStore;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const TOKEN: &str = "test-token";

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Both corpus versions ingested and scored at their instants.
pub fn fixture_store() -> Arc<HealthStore> {
    let store = HealthStore::in_memory();
    let model = ScoringModel::bundled_defaults();
    for (v, at) in [(1, "2024-01-01T00:00:00Z"), (2, "2024-02-01T00:00:00Z")] {
        ingest_fixtures(&store, &repo_root().join(format!("fixtures/corpus-v{v}")), None).unwrap();
        score_projects(&store, &model, None, parse_rfc3339(at).unwrap()).unwrap();
    }
    Arc::new(store)
}

pub fn app(store: Arc<HealthStore>) -> Router {
    router(AppState::new(store, Some(TOKEN.to_string())))
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes)
            .unwrap_or_else(|e| panic!("body is not JSON ({e}): {}", String::from_utf8_lossy(&self.bytes)))
    }
}

pub async fn send(app: &Router, request: Request<Body>) -> Reply {
    let response: Response<Body> = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let headers = response.headers().clone();
    let bytes = response.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, bytes }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub fn schema(name: &str) -> jsonschema::Validator {
    let path = repo_root().join(format!("docs/schemas/api/{name}.schema.json"));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    jsonschema::validator_for(&doc).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn assert_valid(validator: &jsonschema::Validator, value: &Value, context: &str) {
    let errors: Vec<String> = validator
        .iter_errors(value)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{context}: {errors:#?}\n{value:#}");
}
