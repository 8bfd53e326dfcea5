use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use chrono::{DateTime, Utc};
use crossd_core::time::{format_rfc3339, Timestamp};
use crossd_core::{Attestation, MetricRegistry, ProjectRef};
use crossd_store::{PageRequest, ProjectFilter, ProjectSort};
use serde::Deserialize;
use serde_json::json;

use crate::error::{ApiError, ApiResult};
use crate::params::Params;
use crate::AppState;

pub(crate) async fn list(State(state): State<AppState>, RawQuery(raw): RawQuery) -> ApiResult<Response> {
    let p = Params::parse(raw.as_deref());
    let min_criticality: Option<f64> = p.parsed("min_criticality", "a number in [0, 1]")?;
    if min_criticality.is_some_and(|m| !(0.0..=1.0).contains(&m)) {
        return Err(ApiError::invalid_parameter("`min_criticality` must lie within [0, 1]"));
    }
    let filter = ProjectFilter {
        language: p.text("language"),
        license: p.text("license"),
        min_criticality,
        critical_only: p.flag("critical_only")?,
        text: p.text("q"),
    };
    let sort: ProjectSort = p
        .parsed("sort", "criticality_desc or name_asc")?
        .unwrap_or_default();
    let page = PageRequest {
        offset: p.parsed("offset", "a non-negative integer")?.unwrap_or(0),
        limit: p.parsed("limit", "a non-negative integer")?.unwrap_or(PageRequest::default().limit),
    };
    let result = state.store.list_projects(&filter, sort, page)?;
    let items: Vec<_> = result
        .items
        .into_iter()
        .map(|s| json!({"id": s.record.canonical_id(), "record": s.record, "snapshot": s.snapshot}))
        .collect();
    Ok(Json(json!({
        "total": result.total,
        "offset": page.offset,
        "limit": page.limit,
        "sort": sort.as_str(),
        "filters": filter,
        "items": items,
    }))
    .into_response())
}

enum Target {
    Detail(ProjectRef),
    History(ProjectRef),
    Attestations(ProjectRef),
}

/// Resolves the path after `/v1/projects/`. The id may arrive
/// percent-encoded as one segment or raw as `platform:owner/name`. A path
/// that is itself a valid id always means the project.
fn resolve(rest: &str) -> ApiResult<Target> {
    if let Ok(project) = ProjectRef::parse(rest) {
        return Ok(Target::Detail(project));
    }
    let bad = || {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_project_id",
            format!("`{rest}` is not a project id of the form platform:owner/name"),
        )
    };
    let (head, tail) = rest.rsplit_once('/').ok_or_else(bad)?;
    let project = ProjectRef::parse(head).map_err(|_| bad())?;
    match tail {
        "history" => Ok(Target::History(project)),
        "attestations" => Ok(Target::Attestations(project)),
        _ => Err(bad()),
    }
}

fn require_known(state: &AppState, project: &ProjectRef) -> ApiResult<()> {
    if state.store.project_record(project.canonical_id(), None).is_none() {
        return Err(ApiError::project_not_found(project.canonical_id()));
    }
    Ok(())
}

pub(crate) async fn get_nested(
    State(state): State<AppState>,
    Path(rest): Path<String>,
    RawQuery(raw): RawQuery,
) -> ApiResult<Response> {
    match resolve(&rest)? {
        Target::Detail(project) => detail(&state, &project),
        Target::History(project) => history(&state, &project, &Params::parse(raw.as_deref())),
        Target::Attestations(project) => {
            require_known(&state, &project)?;
            Ok(Json(state.store.attestations(project.canonical_id())).into_response())
        }
    }
}

pub(crate) async fn post_nested(
    State(state): State<AppState>,
    Path(rest): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    match resolve(&rest)? {
        Target::Attestations(project) => {
            state.authorize(&headers)?;
            submit_attestation(&state, &project, &body)
        }
        _ => Err(ApiError::new(
            StatusCode::METHOD_NOT_ALLOWED,
            "method_not_allowed",
            "method not allowed on this endpoint",
        )),
    }
}

fn detail(state: &AppState, project: &ProjectRef) -> ApiResult<Response> {
    let id = project.canonical_id();
    let record = state
        .store
        .project_record(id, None)
        .ok_or_else(|| ApiError::project_not_found(id))?;
    let snapshot = state.store.get_latest_snapshot(id);
    let at = snapshot.as_ref().map_or_else(Utc::now, |s| s.computed_at);
    let dependencies = state.store.dependency_report(id, at);
    let open_vulnerabilities: Vec<_> = state
        .store
        .vulnerabilities(id, Some(at))
        .map(|set| {
            crossd_core::metrics::vulns_as_of(&set.vulnerabilities, at)
                .into_iter()
                .filter(|v| v.is_open_at(at))
                .collect()
        })
        .unwrap_or_default();
    Ok(Json(json!({
        "id": id,
        "record": record,
        "snapshot": snapshot,
        "dependencies": dependencies,
        "open_vulnerabilities": open_vulnerabilities,
        "attestations": state.store.attestations(id),
    }))
    .into_response())
}

fn history(state: &AppState, project: &ProjectRef, p: &Params) -> ApiResult<Response> {
    let metric = p
        .text("metric")
        .ok_or_else(|| ApiError::invalid_parameter("`metric` is required"))?;
    if MetricRegistry::bundled().get(&metric).is_none() {
        return Err(ApiError::invalid_parameter(format!("unknown metric `{metric}`")));
    }
    let from = p.timestamp("from")?.unwrap_or(DateTime::<Utc>::MIN_UTC);
    let to = p.timestamp("to")?.unwrap_or(DateTime::<Utc>::MAX_UTC);
    if from > to {
        return Err(ApiError::invalid_parameter("`from` must not be after `to`"));
    }
    require_known(state, project)?;
    let observations = state.store.query_history(project.canonical_id(), &metric, from, to)?;
    Ok(Json(observations).into_response())
}

/// An attestation as submitted: the server assigns the id and fills the
/// project from the path.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewAttestation {
    #[serde(default)]
    project: Option<String>,
    metric_id: String,
    assessor: String,
    value: i64,
    #[serde(default)]
    evidence_uri: Option<String>,
    #[serde(default)]
    asserted_at: Option<Timestamp>,
    #[serde(default)]
    expires_at: Option<Timestamp>,
}

pub(crate) fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = if path == "." {
            inner.to_string()
        } else {
            format!("{path}: {inner}")
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_body", message)
    })
}

fn submit_attestation(state: &AppState, project: &ProjectRef, body: &[u8]) -> ApiResult<Response> {
    let id = project.canonical_id();
    require_known(state, project)?;
    let new: NewAttestation = parse_body(body)?;
    if let Some(p) = &new.project {
        if p != id {
            return Err(ApiError::validation(format!("body names project `{p}` but the path names `{id}`")));
        }
    }
    let attestation = Attestation {
        id: format!("att-{}", uuid::Uuid::new_v4()),
        project: id.to_string(),
        metric_id: new.metric_id,
        assessor: new.assessor,
        value: new.value,
        evidence_uri: new.evidence_uri,
        asserted_at: new.asserted_at.unwrap_or_else(Utc::now),
        expires_at: new.expires_at,
    };
    attestation
        .validate(MetricRegistry::bundled())
        .map_err(|e| ApiError::validation(e.to_string()))?;
    let critical = state.store.get_latest_snapshot(id).is_some_and(|s| s.is_critical);
    if !critical {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "project_not_critical",
            format!("attestations are accepted for critical projects only; `{id}` is not critical"),
        ));
    }
    state
        .store
        .put_batch(vec![crossd_store::StoreRecord::Attestation(attestation.clone())])?;
    tracing::info!(project = id, attestation = %attestation.id, asserted_at = %format_rfc3339(&attestation.asserted_at), "attestation stored");
    Ok((StatusCode::CREATED, Json(attestation)).into_response())
}
