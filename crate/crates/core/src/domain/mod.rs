//! Shared vocabulary: every entity the platform stores, computes or serves.
//!
//! All types are plain immutable values once constructed. Field names match
//! the published JSON schemas under `docs/schemas/`.

mod alert;
mod error;
mod metric;
mod project;
mod records;
mod snapshot;

pub use alert::{Alert, Delivery, DeliveryState, RuleId, WatchlistSubscription};
pub use error::{ObservationError, ValidationError};
pub use metric::{
    validate_observation, Direction, Focus, MetricDefinition, MetricKind, MetricObservation,
    MetricValue, NormalizationMethod, NormalizationSpec, ORDINAL_MAX,
};
pub use project::{canonicalize, Platform, ProjectRecord, ProjectRef};
pub use records::{
    Attestation, DepKind, DependencyEdge, DependencyReport, RepoStats, Severity,
    TimeToFixStats, VulnerabilityRecord,
};
pub use snapshot::{CriticalPolicy, CriticalityParams, HealthSnapshot, SignalParams, SignalVector};
