//! Data collection: fixture bundles, vulnerability feeds, dependency
//! manifests and live code-host APIs, all turned into typed records.

use std::fmt;
use std::path::PathBuf;

pub mod codehost;
pub mod cvss;
pub mod fixture;
pub mod manifest;
pub mod osv;
#[cfg(feature = "stub-server")]
pub mod replay;

pub use codehost::{
    collect_code_host, Backoff, CodeHostCollector, CodeHostResult, CollectError, CollectOptions, CollectorCursor,
    Dialect, HostEndpoint, HostLimiter,
};
pub use fixture::{collect_fixture, fixture_dir_name, list_fixture_projects, FixtureData, FixtureError};
pub use manifest::ingest_dependency_manifest;
pub use osv::ingest_osv_document;

/// Environment variable holding the code-host API token.
pub const TOKEN_ENV: &str = "CROSSD_TOKEN";

pub fn token_from_env() -> Option<String> {
    std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty())
}

/// A document that does not match its expected shape. Names the file (when
/// there is one) and the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub file: Option<PathBuf>,
    pub field: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError {
            file: None,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn in_file(mut self, file: impl Into<PathBuf>) -> Self {
        self.file = Some(file.into());
        self
    }
}

impl fmt::Display for SchemaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{}: ", file.display())?;
        }
        if self.field.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "field `{}`: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for SchemaError {}

/// Deserializes `text`, reporting the failing field path on error.
pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { String::new() } else { path };
        let inner = e.into_inner();
        // serde names missing fields in the message rather than the path
        let message = inner.to_string();
        let field = if field.is_empty() {
            missing_field_name(&message).unwrap_or_default()
        } else {
            field
        };
        SchemaError::new(field, message)
    })
}

fn missing_field_name(message: &str) -> Option<String> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next().map(str::to_string)
}
