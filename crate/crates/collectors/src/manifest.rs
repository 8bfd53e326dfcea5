//! Dependency manifests to [`DependencyEdge`]s.
//!
//! Accepted shape (package.json / Cargo.toml-in-JSON style):
//!
//! ```json
//! { "name": "a",
//!   "dependencies": { "b": "^1.0", "c": { "version": "2" } },
//!   "dev_dependencies": { "d": "*" } }
//! ```
//!
//! `devDependencies` and `dev-dependencies` are accepted as aliases.

use crossd_core::{DepKind, DependencyEdge, ProjectRef};
use serde_json::{Map, Value};

use crate::SchemaError;

const DEV_SECTIONS: [&str; 3] = ["dev_dependencies", "devDependencies", "dev-dependencies"];

fn section<'a>(doc: &'a Map<String, Value>, key: &str) -> Result<Option<&'a Map<String, Value>>, SchemaError> {
    match doc.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Object(m)) => Ok(Some(m)),
        Some(_) => Err(SchemaError::new(key, "must be an object of name -> constraint")),
    }
}

fn constraint(key: &str, name: &str, v: &Value) -> Result<String, SchemaError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Object(o) => Ok(o
            .get("version")
            .and_then(Value::as_str)
            .map(str::to_string)
            .unwrap_or_else(|| v.to_string())),
        _ => Err(SchemaError::new(format!("{key}.{name}"), "constraint must be a string or object")),
    }
}

/// One edge per declared dependency, runtime sections first. Self
/// dependencies (on the owner id, the owner's name or the manifest's own
/// `name`) are dropped.
pub fn ingest_dependency_manifest(doc: &str, owner: &ProjectRef) -> Result<Vec<DependencyEdge>, SchemaError> {
    let value: Value = serde_json::from_str(doc).map_err(|e| SchemaError::new("", format!("not JSON: {e}")))?;
    let Value::Object(doc) = value else {
        return Err(SchemaError::new("", "manifest must be a JSON object"));
    };
    let own_name = doc.get("name").and_then(Value::as_str);
    let is_self = |dep: &str| {
        dep.eq_ignore_ascii_case(owner.canonical_id())
            || dep.eq_ignore_ascii_case(owner.name())
            || own_name.is_some_and(|n| dep.eq_ignore_ascii_case(n))
    };

    let mut sections = vec![("dependencies", DepKind::Runtime)];
    sections.extend(DEV_SECTIONS.iter().map(|k| (*k, DepKind::Dev)));

    let mut edges = Vec::new();
    for (key, kind) in sections {
        let Some(map) = section(&doc, key)? else { continue };
        for (name, v) in map {
            if name.trim().is_empty() {
                return Err(SchemaError::new(key, "empty dependency name"));
            }
            let constraint = constraint(key, name, v)?;
            if is_self(name) {
                continue;
            }
            edges.push(DependencyEdge {
                from: owner.canonical_id().to_string(),
                to: name.clone(),
                kind,
                constraint,
            });
        }
    }
    Ok(edges)
}
