use std::collections::BTreeMap;
use std::str::FromStr;

use crossd_core::time::{parse_rfc3339, Timestamp};

use crate::error::ApiError;

/// Decoded query-string parameters. A repeated key keeps its last value.
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn parse(raw: Option<&str>) -> Self {
        let map = form_urlencoded::parse(raw.unwrap_or("").as_bytes()).into_owned().collect();
        Params(map)
    }

    pub fn text(&self, key: &str) -> Option<String> {
        self.0.get(key).map(|v| v.trim().to_string()).filter(|v| !v.is_empty())
    }

    pub fn parsed<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ApiError> {
        match self.text(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| ApiError::invalid_parameter(format!("`{key}` must be {what}, got `{v}`"))),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, ApiError> {
        match self.text(key).as_deref() {
            None | Some("false") | Some("0") => Ok(false),
            Some("true") | Some("1") => Ok(true),
            Some(v) => Err(ApiError::invalid_parameter(format!("`{key}` must be true or false, got `{v}`"))),
        }
    }

    pub fn timestamp(&self, key: &str) -> Result<Option<Timestamp>, ApiError> {
        match self.text(key) {
            None => Ok(None),
            Some(v) => parse_rfc3339(&v)
                .map(Some)
                .map_err(|_| ApiError::invalid_parameter(format!("`{key}` must be an RFC 3339 timestamp, got `{v}`"))),
        }
    }
}
