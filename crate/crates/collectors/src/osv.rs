//! OSV-style vulnerability documents to [`VulnerabilityRecord`]s.

use crossd_core::time::{parse_rfc3339, Timestamp};
use crossd_core::{Severity, VulnerabilityRecord};
use serde_json::Value;

use crate::cvss::base_score_v3;
use crate::SchemaError;

fn str_at<'a>(v: &'a Value, key: &str) -> Option<&'a str> {
    v.get(key).and_then(Value::as_str)
}

fn timestamp(doc: &Value, key: &'static str) -> Result<Option<Timestamp>, SchemaError> {
    match str_at(doc, key) {
        None => Ok(None),
        Some(text) => parse_rfc3339(text)
            .map(Some)
            .map_err(|e| SchemaError::new(key, format!("bad timestamp `{text}`: {e}"))),
    }
}

fn categorical(label: &str) -> Option<Severity> {
    match label.trim().to_ascii_uppercase().as_str() {
        "LOW" => Some(Severity::Low),
        "MODERATE" | "MEDIUM" => Some(Severity::Medium),
        "HIGH" => Some(Severity::High),
        "CRITICAL" => Some(Severity::Critical),
        _ => None,
    }
}

fn numeric(score: &str) -> Option<f64> {
    score
        .trim()
        .parse::<f64>()
        .ok()
        .or_else(|| base_score_v3(score))
        .filter(|s| (0.0..=10.0).contains(s))
}

/// Collects every severity statement in the document: numeric scores (plain
/// numbers or CVSS v3 vectors) and categorical labels.
fn severities(doc: &Value) -> (Vec<f64>, Vec<Severity>) {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut scan_list = |list: Option<&Value>| {
        for entry in list.and_then(Value::as_array).into_iter().flatten() {
            if let Some(s) = str_at(entry, "score").and_then(numeric) {
                scores.push(s);
            }
        }
    };
    scan_list(doc.get("severity"));
    for affected in doc.get("affected").and_then(Value::as_array).into_iter().flatten() {
        scan_list(affected.get("severity"));
        for section in ["database_specific", "ecosystem_specific"] {
            if let Some(label) = affected.get(section).and_then(|d| str_at(d, "severity")).and_then(categorical) {
                labels.push(label);
            }
        }
    }
    if let Some(label) = doc
        .get("database_specific")
        .and_then(|d| str_at(d, "severity"))
        .and_then(categorical)
    {
        labels.push(label);
    }
    (scores, labels)
}

fn describe_range(range: &Value) -> Vec<String> {
    let mut pieces = Vec::new();
    for event in range.get("events").and_then(Value::as_array).into_iter().flatten() {
        if let Some(v) = str_at(event, "introduced") {
            pieces.push(format!(">={v}"));
        } else if let Some(v) = str_at(event, "fixed") {
            pieces.push(format!("<{v}"));
        } else if let Some(v) = str_at(event, "last_affected") {
            pieces.push(format!("<={v}"));
        } else if let Some(v) = str_at(event, "limit") {
            pieces.push(format!("<{v}"));
        }
    }
    pieces
}

/// Maps one OSV document. The highest stated severity wins; a document with
/// only a category gets that band's midpoint score, one with no severity at
/// all is treated as medium. The fix timestamp comes from a
/// `database_specific.fixed_at` (range, affected entry or document level),
/// falling back to `modified` when a `fixed` event exists.
pub fn ingest_osv_document(doc: &str) -> Result<VulnerabilityRecord, SchemaError> {
    let doc: Value = serde_json::from_str(doc).map_err(|e| SchemaError::new("", format!("not JSON: {e}")))?;
    if !doc.is_object() {
        return Err(SchemaError::new("", "document must be a JSON object"));
    }
    let vuln_id = str_at(&doc, "id")
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| SchemaError::new("id", "missing vulnerability id"))?
        .to_string();
    let published_at =
        timestamp(&doc, "published")?.ok_or_else(|| SchemaError::new("published", "missing published timestamp"))?;
    let modified = timestamp(&doc, "modified")?;

    let affected: Vec<&Value> = doc.get("affected").and_then(Value::as_array).into_iter().flatten().collect();
    let package = affected
        .iter()
        .find_map(|a| a.get("package").and_then(|p| str_at(p, "name")))
        .ok_or_else(|| SchemaError::new("affected[].package.name", "no affected package"))?
        .to_string();

    let mut range_parts = Vec::new();
    let mut fixed_version = None;
    let mut explicit_fix: Option<&str> = None;
    for a in &affected {
        for range in a.get("ranges").and_then(Value::as_array).into_iter().flatten() {
            let pieces = describe_range(range);
            if !pieces.is_empty() {
                range_parts.push(pieces.join(", "));
            }
            let fixed_here = range
                .get("events")
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
                .find_map(|e| str_at(e, "fixed"));
            if let Some(v) = fixed_here {
                fixed_version.get_or_insert_with(|| v.to_string());
                explicit_fix = explicit_fix.or_else(|| range.get("database_specific").and_then(|d| str_at(d, "fixed_at")));
            }
        }
        explicit_fix = explicit_fix.or_else(|| a.get("database_specific").and_then(|d| str_at(d, "fixed_at")));
        if range_parts.is_empty() {
            let versions: Vec<String> = a
                .get("versions")
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
                .filter_map(Value::as_str)
                .map(|v| format!("={v}"))
                .collect();
            range_parts.extend(versions);
        }
    }
    explicit_fix = explicit_fix.or_else(|| doc.get("database_specific").and_then(|d| str_at(d, "fixed_at")));
    let affected_range = if range_parts.is_empty() {
        "*".to_string()
    } else {
        range_parts.join(" || ")
    };

    let fixed_at = match (explicit_fix, &fixed_version) {
        (Some(text), _) => Some(
            parse_rfc3339(text)
                .map_err(|e| SchemaError::new("database_specific.fixed_at", format!("bad timestamp `{text}`: {e}")))?,
        ),
        (None, Some(_)) => modified,
        (None, None) => None,
    };
    if let Some(f) = fixed_at {
        if f < published_at {
            return Err(SchemaError::new("fixed_at", "fix precedes publication"));
        }
    }

    let (scores, labels) = severities(&doc);
    let best_score = scores.iter().copied().reduce(f64::max);
    let severity = scores
        .iter()
        .map(|s| Severity::from_score(*s))
        .chain(labels.iter().copied())
        .max()
        .unwrap_or(Severity::Medium);
    let severity_score = best_score.unwrap_or_else(|| severity.band_midpoint());

    Ok(VulnerabilityRecord {
        vuln_id,
        package,
        affected_range,
        severity,
        severity_score,
        published_at,
        fixed_at,
        fixed_version,
    })
}
