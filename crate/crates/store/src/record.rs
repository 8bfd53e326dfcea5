use chrono::{SecondsFormat, TimeZone, Utc};
use crossd_core::time::Timestamp;
use crossd_core::{
    validate_observation, Alert, Attestation, DeliveryState, DependencyEdge, HealthSnapshot, MetricObservation,
    MetricRegistry, ProjectRecord, ProjectRef, RepoStats, ValidationError, VulnerabilityRecord,
    WatchlistSubscription,
};
use serde::{Deserialize, Serialize};

/// Dependency edges of one project as collected at `fetched_at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencySet {
    pub project: String,
    pub fetched_at: Timestamp,
    pub edges: Vec<DependencyEdge>,
}

/// Vulnerabilities affecting one project as known at `fetched_at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilitySet {
    pub project: String,
    pub fetched_at: Timestamp,
    pub vulnerabilities: Vec<VulnerabilityRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatchlistTombstone {
    pub id: String,
}

/// One delivery attempt outcome for an alert; the latest one is current.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryUpdate {
    pub alert_id: String,
    pub state: DeliveryState,
    pub attempts: u32,
    pub at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One line of a segment or export file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "record", rename_all = "snake_case")]
pub enum StoreRecord {
    Project(ProjectRecord),
    Stats(RepoStats),
    Dependencies(DependencySet),
    Vulnerabilities(VulnerabilitySet),
    Attestation(Attestation),
    Observation(MetricObservation),
    Snapshot(HealthSnapshot),
    Watchlist(WatchlistSubscription),
    WatchlistDeleted(WatchlistTombstone),
    Alert(Alert),
    AlertDelivery(DeliveryUpdate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Kind {
    Project,
    Stats,
    Dependencies,
    Vulnerabilities,
    Attestation,
    Observation,
    Snapshot,
    Watchlist,
    WatchlistDeleted,
    Alert,
    AlertDelivery,
}

/// Total order of all records: kind, then owning project ("" for global
/// records), then a kind-specific sort key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct RecordKey {
    pub kind: Kind,
    pub project: String,
    pub sort: String,
}

impl std::fmt::Display for RecordKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}/{}/{}", self.kind, self.project, self.sort.replace(SEP, "/"))
    }
}

pub(crate) const SEP: char = '\u{1f}';

fn key_range() -> (Timestamp, Timestamp) {
    let lo = Utc.with_ymd_and_hms(0, 1, 1, 0, 0, 0).unwrap();
    let hi = Utc.with_ymd_and_hms(9999, 12, 31, 23, 59, 59).unwrap() + chrono::Duration::nanoseconds(999_999_999);
    (lo, hi)
}

/// Fixed-width timestamp so that string order is time order. Instants
/// outside years 0000-9999 clamp to the nearest end, which keeps open
/// query bounds usable.
pub(crate) fn ts_key(t: &Timestamp) -> String {
    let (lo, hi) = key_range();
    (*t).clamp(lo, hi).to_rfc3339_opts(SecondsFormat::Nanos, true)
}

impl StoreRecord {
    pub(crate) fn key(&self) -> RecordKey {
        let (kind, project, sort) = match self {
            StoreRecord::Project(r) => (Kind::Project, r.canonical_id().to_string(), ts_key(&r.fetched_at)),
            StoreRecord::Stats(s) => (Kind::Stats, s.project.clone(), ts_key(&s.fetched_at)),
            StoreRecord::Dependencies(d) => (Kind::Dependencies, d.project.clone(), ts_key(&d.fetched_at)),
            StoreRecord::Vulnerabilities(v) => (Kind::Vulnerabilities, v.project.clone(), ts_key(&v.fetched_at)),
            StoreRecord::Attestation(a) => (Kind::Attestation, a.project.clone(), a.id.clone()),
            StoreRecord::Observation(o) => (
                Kind::Observation,
                o.project.clone(),
                format!("{}{SEP}{}{SEP}{}", o.metric_id, ts_key(&o.observed_at), o.source),
            ),
            StoreRecord::Snapshot(s) => (
                Kind::Snapshot,
                s.project.clone(),
                format!("{}{SEP}{}", ts_key(&s.computed_at), s.input_digest),
            ),
            StoreRecord::Watchlist(w) => (Kind::Watchlist, String::new(), w.id.clone()),
            StoreRecord::WatchlistDeleted(t) => (Kind::WatchlistDeleted, String::new(), t.id.clone()),
            StoreRecord::Alert(a) => (Kind::Alert, String::new(), a.id.clone()),
            StoreRecord::AlertDelivery(d) => (
                Kind::AlertDelivery,
                String::new(),
                format!("{}{SEP}{}{SEP}{:?}", d.alert_id, ts_key(&d.at), d.state),
            ),
        };
        RecordKey { kind, project, sort }
    }

    fn key_instant(&self) -> Option<(&'static str, Timestamp)> {
        match self {
            StoreRecord::Project(r) => Some(("fetched_at", r.fetched_at)),
            StoreRecord::Stats(s) => Some(("fetched_at", s.fetched_at)),
            StoreRecord::Dependencies(d) => Some(("fetched_at", d.fetched_at)),
            StoreRecord::Vulnerabilities(v) => Some(("fetched_at", v.fetched_at)),
            StoreRecord::Observation(o) => Some(("observed_at", o.observed_at)),
            StoreRecord::Snapshot(s) => Some(("computed_at", s.computed_at)),
            StoreRecord::AlertDelivery(d) => Some(("at", d.at)),
            _ => None,
        }
    }

    pub(crate) fn validate(&self, registry: &MetricRegistry) -> Result<(), ValidationError> {
        if let Some((field, t)) = self.key_instant() {
            let (lo, hi) = key_range();
            if t < lo || t > hi {
                return Err(ValidationError::invalid(field, "year must lie within 0000-9999"));
            }
        }
        match self {
            StoreRecord::Project(r) => r.validate(),
            StoreRecord::Stats(s) => s.validate(),
            StoreRecord::Dependencies(d) => {
                ProjectRef::parse(&d.project)?;
                d.edges.iter().try_for_each(DependencyEdge::validate)
            }
            StoreRecord::Vulnerabilities(v) => {
                ProjectRef::parse(&v.project)?;
                v.vulnerabilities.iter().try_for_each(VulnerabilityRecord::validate)
            }
            StoreRecord::Attestation(a) => a.validate(registry),
            StoreRecord::Observation(o) => validate_observation(o, registry).map_err(|e| match e {
                crossd_core::ObservationError::Project(v) => v,
                other => ValidationError::invalid("observation", other.to_string()),
            }),
            StoreRecord::Snapshot(s) => validate_snapshot(s),
            StoreRecord::Watchlist(w) => w.validate(),
            StoreRecord::WatchlistDeleted(t) => non_empty("id", &t.id),
            StoreRecord::Alert(a) => {
                non_empty("id", &a.id)?;
                non_empty("subscription_id", &a.subscription_id)?;
                ProjectRef::parse(&a.project).map(drop)
            }
            StoreRecord::AlertDelivery(d) => non_empty("alert_id", &d.alert_id),
        }
    }
}

fn non_empty(field: &'static str, value: &str) -> Result<(), ValidationError> {
    if value.trim().is_empty() {
        Err(ValidationError::Empty { field })
    } else {
        Ok(())
    }
}

fn validate_snapshot(s: &HealthSnapshot) -> Result<(), ValidationError> {
    ProjectRef::parse(&s.project)?;
    let unit = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
    if !unit(s.criticality) {
        return Err(ValidationError::invalid("criticality", "must lie within [0, 1]"));
    }
    if s.category_scores.values().any(|v| !unit(*v)) {
        return Err(ValidationError::invalid("category_scores", "must lie within [0, 1]"));
    }
    non_empty("input_digest", &s.input_digest)
}
