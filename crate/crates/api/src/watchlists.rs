use std::collections::BTreeSet;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use crossd_core::{Delivery, RuleId, WatchlistSubscription};
use serde::Deserialize;

use crate::error::{ApiError, ApiResult};
use crate::projects::parse_body;
use crate::AppState;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewWatchlist {
    subscriber: String,
    projects: BTreeSet<String>,
    rules: BTreeSet<RuleId>,
    delivery: Delivery,
}

fn not_found(id: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "watchlist_not_found", format!("no watchlist `{id}`"))
}

pub(crate) async fn create(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    state.authorize(&headers)?;
    let new: NewWatchlist = parse_body(&body)?;
    let subscription = WatchlistSubscription {
        id: uuid::Uuid::new_v4().to_string(),
        subscriber: new.subscriber,
        projects: new.projects,
        rules: new.rules,
        delivery: new.delivery,
    };
    subscription
        .validate()
        .map_err(|e| ApiError::validation(e.to_string()))?;
    state.store.put_watchlist(subscription.clone())?;
    Ok((StatusCode::CREATED, Json(subscription)).into_response())
}

pub(crate) async fn read(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let subscription = state.store.watchlist(&id).ok_or_else(|| not_found(&id))?;
    Ok(Json(subscription).into_response())
}

pub(crate) async fn delete(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    state.authorize(&headers)?;
    if state.store.delete_watchlist(&id)? {
        Ok(StatusCode::NO_CONTENT.into_response())
    } else {
        Err(not_found(&id))
    }
}
