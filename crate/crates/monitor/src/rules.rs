use std::collections::BTreeSet;

use crossd_core::{HealthSnapshot, ProjectRecord, RuleId, VulnerabilityRecord};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Everything rule evaluation needs about one project at one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectState {
    pub snapshot: HealthSnapshot,
    /// Vulnerabilities open at the snapshot instant.
    pub vulns: Vec<VulnerabilityRecord>,
    pub record: Option<ProjectRecord>,
    pub commits_90d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleConfig {
    /// ACTIVITY_DROP fires when commits_90d falls below `(1 - ratio)` of its
    /// previous value.
    pub activity_drop_ratio: f64,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            activity_drop_ratio: 0.5,
        }
    }
}

/// A rule that fired for one project on one snapshot transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub project: String,
    pub rule: RuleId,
    pub snapshot_digest: String,
    pub triggered_at: crossd_core::time::Timestamp,
    pub payload: Value,
}

fn high_ids(vulns: &[VulnerabilityRecord]) -> BTreeSet<&str> {
    vulns
        .iter()
        .filter(|v| v.severity.is_high_or_critical())
        .map(|v| v.vuln_id.as_str())
        .collect()
}

/// Compares two consecutive states of a project. Rules are independent;
/// findings come out in rule order.
pub fn evaluate_rules(prev: Option<&ProjectState>, next: &ProjectState, config: &RuleConfig) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut fire = |rule: RuleId, payload: Value| {
        out.push(Finding {
            project: next.snapshot.project.clone(),
            rule,
            snapshot_digest: next.snapshot.input_digest.clone(),
            triggered_at: next.snapshot.computed_at,
            payload,
        })
    };

    let before = prev.map(|p| high_ids(&p.vulns)).unwrap_or_default();
    let added: Vec<&VulnerabilityRecord> = next
        .vulns
        .iter()
        .filter(|v| v.severity.is_high_or_critical() && !before.contains(v.vuln_id.as_str()))
        .collect();
    if !added.is_empty() {
        let vulns: Vec<Value> = added
            .iter()
            .map(|v| {
                json!({
                    "vuln_id": v.vuln_id,
                    "package": v.package,
                    "severity": v.severity,
                    "severity_score": v.severity_score,
                })
            })
            .collect();
        fire(RuleId::NewHighVuln, json!({ "vulnerabilities": vulns }));
    }

    let was_critical = prev.is_some_and(|p| p.snapshot.is_critical);
    if next.snapshot.is_critical && !was_critical {
        fire(
            RuleId::BecameCritical,
            json!({
                "previous_criticality": prev.map(|p| p.snapshot.criticality),
                "criticality": next.snapshot.criticality,
            }),
        );
    }

    if let (Some(before), Some(after)) = (prev.and_then(|p| p.commits_90d), next.commits_90d) {
        if after < (1.0 - config.activity_drop_ratio) * before {
            fire(
                RuleId::ActivityDrop,
                json!({ "metric_id": "commits_90d", "previous": before, "current": after }),
            );
        }
    }

    if let (Some(old), Some(new)) = (prev.and_then(|p| p.record.as_ref()), next.record.as_ref()) {
        if old.license != new.license {
            fire(
                RuleId::LicenseChanged,
                json!({ "previous": old.license, "current": new.license }),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use crossd_core::{ProjectRef, Severity};
    use std::collections::BTreeMap;

    fn state(critical: bool, vulns: &[(&str, Severity)], license: Option<&str>, commits: f64) -> ProjectState {
        let at = Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap();
        ProjectState {
            snapshot: HealthSnapshot {
                project: "github:demo/alpha".into(),
                computed_at: at,
                category_scores: BTreeMap::new(),
                criticality: if critical { 0.9 } else { 0.1 },
                is_critical: critical,
                input_digest: "d".into(),
            },
            vulns: vulns
                .iter()
                .map(|(id, s)| VulnerabilityRecord {
                    vuln_id: id.to_string(),
                    package: "alpha".into(),
                    affected_range: "*".into(),
                    severity: *s,
                    severity_score: s.band_midpoint(),
                    published_at: at,
                    fixed_at: None,
                    fixed_version: None,
                })
                .collect(),
            record: Some(ProjectRecord {
                project: ProjectRef::parse("github:demo/alpha").unwrap(),
                description: None,
                primary_language: None,
                license: license.map(str::to_string),
                homepage: None,
                created_at: at,
                fetched_at: at,
                topics: vec![],
            }),
            commits_90d: Some(commits),
        }
    }

    fn rules(prev: Option<&ProjectState>, next: &ProjectState) -> Vec<RuleId> {
        evaluate_rules(prev, next, &RuleConfig::default()).iter().map(|f| f.rule).collect()
    }

    #[test]
    fn no_change_no_findings() {
        let s = state(true, &[("V1", Severity::High)], Some("MIT"), 10.0);
        assert!(rules(Some(&s), &s).is_empty());
    }

    #[test]
    fn new_critical_vuln() {
        let prev = state(false, &[("V1", Severity::High)], Some("MIT"), 10.0);
        let next = state(false, &[("V1", Severity::High), ("V2", Severity::Critical)], Some("MIT"), 10.0);
        let found = evaluate_rules(Some(&prev), &next, &RuleConfig::default());
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].rule, RuleId::NewHighVuln);
        assert_eq!(found[0].payload["vulnerabilities"][0]["vuln_id"], "V2");
    }

    #[test]
    fn medium_vuln_ignored() {
        let prev = state(false, &[], None, 10.0);
        let next = state(false, &[("V3", Severity::Medium)], None, 10.0);
        assert!(rules(Some(&prev), &next).is_empty());
    }

    #[test]
    fn activity_drop_threshold() {
        let prev = state(false, &[], None, 100.0);
        assert_eq!(rules(Some(&prev), &state(false, &[], None, 40.0)), [RuleId::ActivityDrop]);
        assert!(rules(Some(&prev), &state(false, &[], None, 50.0)).is_empty());
        assert!(rules(Some(&prev), &state(false, &[], None, 49.0)).contains(&RuleId::ActivityDrop));
    }

    #[test]
    fn becoming_critical_and_license() {
        let prev = state(false, &[], Some("MIT"), 10.0);
        let next = state(true, &[], Some("BUSL-1.1"), 10.0);
        assert_eq!(rules(Some(&prev), &next), [RuleId::BecameCritical, RuleId::LicenseChanged]);
        assert_eq!(rules(None, &next), [RuleId::BecameCritical]);
        assert!(rules(Some(&next), &state(true, &[], Some("BUSL-1.1"), 10.0)).is_empty());
    }
}
