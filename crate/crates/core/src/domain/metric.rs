use serde::{Deserialize, Serialize};

use super::{ObservationError, ProjectRef};
use crate::registry::MetricRegistry;
use crate::time::Timestamp;

/// Highest value of the qualitative ordinal scale (0 = no evidence, 4 = exemplary).
pub const ORDINAL_MAX: i64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Quantitative,
    Qualitative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Focus {
    Security,
    Activity,
    Relevance,
    General,
}

impl Focus {
    pub const ALL: [Focus; 4] = [Focus::Security, Focus::Activity, Focus::Relevance, Focus::General];

    pub fn as_str(self) -> &'static str {
        match self {
            Focus::Security => "security",
            Focus::Activity => "activity",
            Focus::Relevance => "relevance",
            Focus::General => "general",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMethod {
    SaturatingLog,
    LinearClamp,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub method: NormalizationMethod,
    /// Value at which the normalized output reaches 1.
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDefinition {
    pub id: String,
    pub display_name: String,
    pub kind: MetricKind,
    pub focus: Focus,
    pub unit: String,
    pub direction: Direction,
    pub normalization: NormalizationSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricValue {
    Number(f64),
    Ordinal(i64),
    Text(String),
}

impl MetricValue {
    pub fn variant_name(&self) -> &'static str {
        match self {
            MetricValue::Number(_) => "number",
            MetricValue::Ordinal(_) => "ordinal",
            MetricValue::Text(_) => "text",
        }
    }

    /// Numeric reading of the value, if it has one.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            MetricValue::Number(v) => Some(*v),
            MetricValue::Ordinal(v) => Some(*v as f64),
            MetricValue::Text(_) => None,
        }
    }
}

/// One timestamped measured value of one metric for one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricObservation {
    pub metric_id: String,
    pub project: String,
    pub value: MetricValue,
    pub observed_at: Timestamp,
    pub source: String,
}

/// Checks an observation against the registry: the metric must exist, the
/// value variant must match its kind and the timestamp must be a real one.
pub fn validate_observation(
    obs: &MetricObservation,
    registry: &MetricRegistry,
) -> Result<(), ObservationError> {
    let def = registry
        .get(&obs.metric_id)
        .ok_or_else(|| ObservationError::UnknownMetric(obs.metric_id.clone()))?;
    ProjectRef::parse(&obs.project)?;
    let mismatch = |expected| ObservationError::KindMismatch {
        metric_id: obs.metric_id.clone(),
        expected,
        got: obs.value.variant_name(),
    };
    match (def.kind, &obs.value) {
        (MetricKind::Quantitative, MetricValue::Number(v)) => {
            if !v.is_finite() {
                return Err(ObservationError::NonFinite {
                    metric_id: obs.metric_id.clone(),
                });
            }
        }
        (MetricKind::Quantitative, _) => return Err(mismatch("quantitative")),
        (MetricKind::Qualitative, MetricValue::Ordinal(v)) => {
            if !(0..=ORDINAL_MAX).contains(v) {
                return Err(ObservationError::OrdinalOutOfRange {
                    metric_id: obs.metric_id.clone(),
                    value: *v,
                });
            }
        }
        (MetricKind::Qualitative, MetricValue::Text(_)) => {}
        (MetricKind::Qualitative, MetricValue::Number(_)) => return Err(mismatch("qualitative")),
    }
    if obs.observed_at.timestamp() <= 0 {
        return Err(ObservationError::BadTimestamp {
            metric_id: obs.metric_id.clone(),
        });
    }
    Ok(())
}
