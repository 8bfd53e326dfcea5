use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("field `{field}` must not be empty")]
    Empty { field: &'static str },
    #[error("field `{field}` contains forbidden character {ch:?}")]
    ForbiddenChar { field: &'static str, ch: char },
    #[error("malformed canonical id `{0}`: expected <platform>:<owner>/<name>")]
    MalformedId(String),
    #[error("unknown platform `{0}`")]
    UnknownPlatform(String),
    #[error("field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

impl ValidationError {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ValidationError::Invalid {
            field,
            reason: reason.into(),
        }
    }

    /// The offending field, when the error is attributable to one.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            ValidationError::Empty { field }
            | ValidationError::ForbiddenChar { field, .. }
            | ValidationError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservationError {
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("metric `{metric_id}` is {expected}; got a {got} value")]
    KindMismatch {
        metric_id: String,
        expected: &'static str,
        got: &'static str,
    },
    #[error("metric `{metric_id}`: ordinal {value} outside 0..=4")]
    OrdinalOutOfRange { metric_id: String, value: i64 },
    #[error("metric `{metric_id}`: number value must be finite")]
    NonFinite { metric_id: String },
    #[error("observation of `{metric_id}` carries a missing or default timestamp")]
    BadTimestamp { metric_id: String },
    #[error(transparent)]
    Project(#[from] ValidationError),
}
