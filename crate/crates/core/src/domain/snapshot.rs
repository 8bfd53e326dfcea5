use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Focus, ValidationError};
use crate::time::Timestamp;

/// Non-negative, finite signal values keyed by signal name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct SignalVector(BTreeMap<String, f64>);

impl SignalVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) -> Result<(), ValidationError> {
        if !value.is_finite() || value < 0.0 {
            return Err(ValidationError::invalid(
                "signals",
                format!("signal value {value} must be finite and non-negative"),
            ));
        }
        self.0.insert(name.into(), value);
        Ok(())
    }

    /// Value of a signal, 0 when missing.
    pub fn get(&self, name: &str) -> f64 {
        self.0.get(name).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl TryFrom<BTreeMap<String, f64>> for SignalVector {
    type Error = ValidationError;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self, Self::Error> {
        let mut v = SignalVector::new();
        for (k, x) in map {
            v.insert(k, x)?;
        }
        Ok(v)
    }
}

impl From<SignalVector> for BTreeMap<String, f64> {
    fn from(v: SignalVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    pub weight: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPolicy {
    pub score_threshold: f64,
    pub dependents_threshold: u64,
}

impl Default for CriticalPolicy {
    fn default() -> Self {
        CriticalPolicy {
            score_threshold: 0.8,
            dependents_threshold: 5000,
        }
    }
}

/// Per-signal weight and saturation threshold, plus the critical-project policy.
///
/// Weights and thresholds share one map, so their signal-name sets are
/// identical by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityParams {
    pub signals: BTreeMap<String, SignalParams>,
    pub critical_policy: CriticalPolicy,
}

impl CriticalityParams {
    pub const DEFAULT_SIGNALS: [(&'static str, f64, f64); 4] = [
        ("commits_90d", 1.0, 1_000.0),
        ("contributors", 2.0, 5_000.0),
        ("transitive_dependents", 3.0, 50_000.0),
        ("downloads_90d", 1.0, 1_000_000.0),
    ];

    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut any_positive = false;
        for (name, p) in &self.signals {
            if !p.weight.is_finite() || p.weight < 0.0 {
                return Err(ValidationError::invalid(
                    "weight",
                    format!("signal `{name}` weight must be finite and >= 0"),
                ));
            }
            if !p.threshold.is_finite() || p.threshold <= 0.0 {
                return Err(ValidationError::invalid(
                    "threshold",
                    format!("signal `{name}` threshold must be > 0"),
                ));
            }
            any_positive |= p.weight > 0.0;
        }
        if !any_positive {
            return Err(ValidationError::invalid("weight", "at least one weight must be > 0"));
        }
        let t = self.critical_policy.score_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(ValidationError::invalid("score_threshold", "must lie in (0, 1]"));
        }
        if self.critical_policy.dependents_threshold == 0 {
            return Err(ValidationError::invalid("dependents_threshold", "must be positive"));
        }
        Ok(())
    }
}

impl Default for CriticalityParams {
    fn default() -> Self {
        let signals = Self::DEFAULT_SIGNALS
            .iter()
            .map(|(name, weight, threshold)| {
                (
                    name.to_string(),
                    SignalParams {
                        weight: *weight,
                        threshold: *threshold,
                    },
                )
            })
            .collect();
        CriticalityParams {
            signals,
            critical_policy: CriticalPolicy::default(),
        }
    }
}

/// Per-project scores and flags computed at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthSnapshot {
    pub project: String,
    pub computed_at: Timestamp,
    pub category_scores: BTreeMap<Focus, f64>,
    pub criticality: f64,
    pub is_critical: bool,
    pub input_digest: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_signal_rejected() {
        let mut v = SignalVector::new();
        assert!(v.insert("x", -1.0).is_err());
        assert!(v.insert("x", f64::NAN).is_err());
        assert!(v.insert("x", 0.0).is_ok());
        assert!(serde_json::from_str::<SignalVector>(r#"{"a": -2}"#).is_err());
    }

    #[test]
    fn default_params_valid() {
        assert!(CriticalityParams::default().validate().is_ok());
    }

    #[test]
    fn all_zero_weights_rejected() {
        let mut p = CriticalityParams::default();
        for s in p.signals.values_mut() {
            s.weight = 0.0;
        }
        assert!(p.validate().is_err());
    }

    #[test]
    fn category_scores_serialize_by_name() {
        let mut scores = BTreeMap::new();
        scores.insert(Focus::Activity, 0.5);
        let text = serde_json::to_string(&scores).unwrap();
        assert_eq!(text, r#"{"activity":0.5}"#);
    }
}
