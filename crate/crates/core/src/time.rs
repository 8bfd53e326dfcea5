//! Timestamp helpers shared across the workspace.

use chrono::{DateTime, SecondsFormat, Utc};

pub type Timestamp = DateTime<Utc>;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Exact elapsed days between two instants (seconds / 86400, not calendar days).
pub fn days_between(from: Timestamp, to: Timestamp) -> f64 {
    let delta = to - from;
    let secs = delta.num_seconds() as f64;
    let sub = delta.subsec_nanos() as f64 / 1e9;
    (secs + sub) / SECONDS_PER_DAY
}

/// RFC 3339 text as used in every external format.
pub fn format_rfc3339(ts: &Timestamp) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn parse_rfc3339(text: &str) -> Result<Timestamp, chrono::ParseError> {
    DateTime::parse_from_rfc3339(text).map(|t| t.with_timezone(&Utc))
}
