use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code,
            message: message.into(),
        }
    }

    pub fn invalid_parameter(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_parameter", message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", message)
    }

    pub fn project_not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "project_not_found", format!("no project `{id}`"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal_error", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<crossd_store::StoreError> for ApiError {
    fn from(e: crossd_store::StoreError) -> Self {
        use crossd_store::StoreError as E;
        match e {
            E::Validation { message, .. } => ApiError::validation(message),
            E::Conflict { key } => ApiError::new(StatusCode::CONFLICT, "conflict", format!("conflicting record {key}")),
            E::InvalidRange => ApiError::invalid_parameter("`from` must not be after `to`"),
            E::LimitTooLarge(n) => ApiError::invalid_parameter(format!("limit {n} exceeds {}", crossd_store::MAX_PAGE_LIMIT)),
            other => {
                tracing::error!(error = %other, "store failure");
                ApiError::internal("storage failure")
            }
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
