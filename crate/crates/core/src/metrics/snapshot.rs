use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};

use super::{
    apply_attestations, category_score, compute_quantitative, criticality_score, is_critical, EngineError,
};
use crate::domain::{
    Attestation, CriticalityParams, DependencyReport, Focus, HealthSnapshot, MetricObservation, RepoStats,
    SignalVector, VulnerabilityRecord,
};
use crate::registry::MetricRegistry;
use crate::time::{format_rfc3339, Timestamp};

/// Everything that parameterizes scoring: the registry, criticality params
/// and per-metric category weights.
#[derive(Debug, Clone)]
pub struct ScoringModel<'r> {
    pub registry: &'r MetricRegistry,
    pub params: CriticalityParams,
    pub category_weights: BTreeMap<String, f64>,
}

impl ScoringModel<'static> {
    pub fn bundled_defaults() -> Self {
        let registry = MetricRegistry::bundled();
        ScoringModel {
            registry,
            params: CriticalityParams::default(),
            category_weights: registry.default_weights(),
        }
    }
}

impl ScoringModel<'_> {
    pub const SCORED_FOCI: [Focus; 3] = [Focus::Security, Focus::Activity, Focus::Relevance];

    /// Category weights restricted to one focus.
    pub fn weights_for(&self, focus: Focus) -> BTreeMap<String, f64> {
        self.category_weights
            .iter()
            .filter(|(id, _)| self.registry.get(id).is_some_and(|d| d.focus == focus))
            .map(|(id, w)| (id.clone(), *w))
            .collect()
    }

    pub fn signals_from(&self, observations: &[MetricObservation]) -> SignalVector {
        let mut signals = SignalVector::new();
        for name in self.params.signals.keys() {
            let latest = observations
                .iter()
                .filter(|o| &o.metric_id == name)
                .filter_map(|o| o.value.as_f64().map(|v| (o.observed_at, v)))
                .max_by_key(|(at, _)| *at);
            if let Some((_, v)) = latest {
                // observations are validated upstream; a negative count cannot occur
                let _ = signals.insert(name.clone(), v.max(0.0));
            }
        }
        signals
    }
}

/// Stable SHA-256 over the (metric_id, value, observed_at) triples, sorted.
pub fn input_digest(observations: &[MetricObservation]) -> String {
    let mut lines: Vec<String> = observations
        .iter()
        .map(|o| {
            let value = serde_json::to_string(&o.value).expect("metric values serialize");
            format!("{}\t{}\t{}\n", o.metric_id, value, format_rfc3339(&o.observed_at))
        })
        .collect();
    lines.sort();
    let mut hasher = Sha256::new();
    for line in &lines {
        hasher.update(line.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Scores one project from its observation set.
pub fn build_snapshot(
    model: &ScoringModel<'_>,
    project: &str,
    observations: &[MetricObservation],
    report: &DependencyReport,
    as_of: Timestamp,
) -> Result<HealthSnapshot, EngineError> {
    model
        .params
        .validate()
        .map_err(|e| super::ParamsError::Policy(e.to_string()))?;
    let signals = model.signals_from(observations);
    let criticality = criticality_score(&signals, &model.params)?;
    let mut category_scores = BTreeMap::new();
    for focus in ScoringModel::SCORED_FOCI {
        if let Some(score) = category_score(observations, model.registry, &model.weights_for(focus), focus)? {
            category_scores.insert(focus, score);
        }
    }
    Ok(HealthSnapshot {
        project: project.to_string(),
        computed_at: as_of,
        category_scores,
        criticality,
        is_critical: is_critical(criticality, report, &model.params.critical_policy),
        input_digest: input_digest(observations),
    })
}

/// Collected facts about one project, as visible at scoring time.
#[derive(Debug, Clone)]
pub struct ProjectInputs<'a> {
    pub stats: &'a RepoStats,
    pub report: &'a DependencyReport,
    pub vulns: &'a [VulnerabilityRecord],
    pub attestations: &'a [Attestation],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub observations: Vec<MetricObservation>,
    pub snapshot: HealthSnapshot,
}

/// The full scoring step: quantitative observations, the critical gate,
/// attestation-fed qualitative observations, then the snapshot.
///
/// Criticality only depends on quantitative signals, so gating attestations
/// on the quantitative-only flag and rebuilding gives a consistent snapshot.
pub fn assess_project(model: &ScoringModel<'_>, inputs: &ProjectInputs<'_>, as_of: Timestamp) -> Result<Assessment, EngineError> {
    let project = inputs.stats.project.as_str();
    let mut observations = compute_quantitative(inputs.stats, inputs.report, inputs.vulns, as_of);
    let gate = build_snapshot(model, project, &observations, inputs.report, as_of)?;
    let own: Vec<Attestation> = inputs
        .attestations
        .iter()
        .filter(|a| a.project == project)
        .cloned()
        .collect();
    observations.extend(apply_attestations(&own, model.registry, gate.is_critical, as_of));
    let snapshot = build_snapshot(model, project, &observations, inputs.report, as_of)?;
    debug_assert_eq!(snapshot.is_critical, gate.is_critical);
    Ok(Assessment { observations, snapshot })
}

/// Packages with at least one vulnerability still open at `as_of`.
pub fn open_vulnerable_packages<'a>(
    vulns: impl IntoIterator<Item = &'a VulnerabilityRecord>,
    as_of: Timestamp,
) -> BTreeSet<String> {
    vulns
        .into_iter()
        .filter(|v| v.published_at <= as_of && v.is_open_at(as_of))
        .map(|v| v.package.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::MetricValue;
    use crate::time::parse_rfc3339;

    fn ts(s: &str) -> Timestamp {
        parse_rfc3339(s).unwrap()
    }

    #[test]
    fn empty_inputs() {
        let model = ScoringModel::bundled_defaults();
        let s = build_snapshot(&model, "github:demo/x", &[], &DependencyReport::empty("github:demo/x"), ts("2024-01-01T00:00:00Z"))
            .unwrap();
        assert_eq!(s.criticality, 0.0);
        assert!(s.category_scores.is_empty());
        assert!(!s.is_critical);
    }

    #[test]
    fn digest_ignores_order_and_is_stable() {
        let at = ts("2024-01-01T00:00:00Z");
        let a = MetricObservation {
            metric_id: "stars".into(),
            project: "github:demo/x".into(),
            value: MetricValue::Number(3.0),
            observed_at: at,
            source: "s".into(),
        };
        let mut b = a.clone();
        b.metric_id = "forks".into();
        let d1 = input_digest(&[a.clone(), b.clone()]);
        let d2 = input_digest(&[b, a]);
        assert_eq!(d1, d2);
        assert_eq!(d1.len(), 64);
        assert_ne!(d1, input_digest(&[]));
    }

    #[test]
    fn unknown_weight_ids_fall_out_of_every_focus() {
        let mut model = ScoringModel::bundled_defaults();
        model.category_weights.insert("no_such".into(), 1.0);
        // unknown ids are filtered out of every focus, so scoring still succeeds
        assert!(build_snapshot(&model, "github:demo/x", &[], &DependencyReport::empty("github:demo/x"), ts("2024-01-01T00:00:00Z")).is_ok());
    }
}
