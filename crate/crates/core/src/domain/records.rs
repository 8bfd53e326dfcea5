use serde::{Deserialize, Serialize};

use super::{MetricKind, ProjectRef, ValidationError, ORDINAL_MAX};
use crate::registry::MetricRegistry;
use crate::time::Timestamp;

/// Raw activity and popularity counts for one project at one instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoStats {
    pub project: String,
    pub contributors: u64,
    pub commits_total: u64,
    pub commits_90d: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lines_of_code: Option<u64>,
    pub forks: u64,
    pub stars: u64,
    pub open_pull_requests: u64,
    pub pull_requests_90d: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mailing_list_posts_90d: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downloads_90d: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_commit_at: Option<Timestamp>,
    pub fetched_at: Timestamp,
}

impl RepoStats {
    pub fn validate(&self) -> Result<(), ValidationError> {
        ProjectRef::parse(&self.project)?;
        if self.commits_90d > self.commits_total {
            return Err(ValidationError::invalid(
                "commits_90d",
                format!(
                    "commits_90d ({}) exceeds commits_total ({})",
                    self.commits_90d, self.commits_total
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Low,
    Medium,
    High,
    Critical,
}

impl Severity {
    /// Score used when a feed only gives the category.
    pub fn band_midpoint(self) -> f64 {
        match self {
            Severity::Low => 2.0,
            Severity::Medium => 5.5,
            Severity::High => 7.5,
            Severity::Critical => 9.5,
        }
    }

    /// CVSS-style banding of a 0–10 score.
    pub fn from_score(score: f64) -> Severity {
        if score >= 9.0 {
            Severity::Critical
        } else if score >= 7.0 {
            Severity::High
        } else if score >= 4.0 {
            Severity::Medium
        } else {
            Severity::Low
        }
    }

    pub fn is_high_or_critical(self) -> bool {
        matches!(self, Severity::High | Severity::Critical)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityRecord {
    pub vuln_id: String,
    pub package: String,
    pub affected_range: String,
    pub severity: Severity,
    pub severity_score: f64,
    pub published_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_at: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_version: Option<String>,
}

impl VulnerabilityRecord {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.vuln_id.trim().is_empty() {
            return Err(ValidationError::Empty { field: "vuln_id" });
        }
        if !(0.0..=10.0).contains(&self.severity_score) {
            return Err(ValidationError::invalid("severity_score", "must lie within [0, 10]"));
        }
        if let Some(fixed) = self.fixed_at {
            if fixed < self.published_at {
                return Err(ValidationError::invalid("fixed_at", "precedes published_at"));
            }
        }
        Ok(())
    }

    /// Whether the vulnerability is still unfixed at `as_of`.
    pub fn is_open_at(&self, as_of: Timestamp) -> bool {
        self.fixed_at.is_none_or(|f| f > as_of)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepKind {
    Runtime,
    Dev,
}

/// `from` is a canonical project id or a package name; `to` a package name
/// (which may itself be a canonical project id for tracked projects).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub from: String,
    pub to: String,
    pub kind: DepKind,
    pub constraint: String,
}

impl DependencyEdge {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.from.trim().is_empty() {
            return Err(ValidationError::Empty { field: "from" });
        }
        if self.to.trim().is_empty() {
            return Err(ValidationError::Empty { field: "to" });
        }
        if self.from.eq_ignore_ascii_case(&self.to) {
            return Err(ValidationError::invalid("to", "self-dependency"));
        }
        Ok(())
    }
}

/// A sourced, timestamped qualitative judgement about a project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attestation {
    pub id: String,
    pub project: String,
    pub metric_id: String,
    pub assessor: String,
    pub value: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence_uri: Option<String>,
    pub asserted_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expires_at: Option<Timestamp>,
}

impl Attestation {
    pub fn validate(&self, registry: &MetricRegistry) -> Result<(), ValidationError> {
        if self.id.trim().is_empty() {
            return Err(ValidationError::Empty { field: "id" });
        }
        ProjectRef::parse(&self.project)?;
        match registry.get(&self.metric_id) {
            Some(def) if def.kind == MetricKind::Qualitative => {}
            Some(_) => {
                return Err(ValidationError::invalid(
                    "metric_id",
                    format!("`{}` is not a qualitative metric", self.metric_id),
                ))
            }
            None => {
                return Err(ValidationError::invalid(
                    "metric_id",
                    format!("unknown metric `{}`", self.metric_id),
                ))
            }
        }
        if self.assessor.trim().is_empty() {
            return Err(ValidationError::Empty { field: "assessor" });
        }
        if !(0..=ORDINAL_MAX).contains(&self.value) {
            return Err(ValidationError::invalid(
                "value",
                format!("ordinal {} outside 0..=4", self.value),
            ));
        }
        if let Some(uri) = &self.evidence_uri {
            if !uri.contains("://") {
                return Err(ValidationError::invalid("evidence_uri", "not an absolute URI"));
            }
        }
        if let Some(expires) = self.expires_at {
            if expires <= self.asserted_at {
                return Err(ValidationError::invalid("expires_at", "must be after asserted_at"));
            }
        }
        Ok(())
    }

    pub fn is_live_at(&self, as_of: Timestamp) -> bool {
        self.asserted_at <= as_of && self.expires_at.is_none_or(|e| e > as_of)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyReport {
    pub project: String,
    pub direct_deps: u64,
    pub transitive_deps: u64,
    pub direct_dependents: u64,
    pub transitive_dependents: u64,
    pub vulnerable_deps: u64,
}

impl DependencyReport {
    pub fn empty(project: &str) -> Self {
        DependencyReport {
            project: project.to_string(),
            direct_deps: 0,
            transitive_deps: 0,
            direct_dependents: 0,
            transitive_dependents: 0,
            vulnerable_deps: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeToFixStats {
    pub fixed_count: u64,
    pub open_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median_days_to_fix: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_open_age_days: Option<f64>,
}
