use std::collections::BTreeMap;

use crossd_core::{Focus, HealthSnapshot, ProjectRecord};
use serde::{Deserialize, Serialize};

pub const MAX_PAGE_LIMIT: usize = 500;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectFilter {
    pub language: Option<String>,
    pub license: Option<String>,
    pub min_criticality: Option<f64>,
    #[serde(default)]
    pub critical_only: bool,
    pub text: Option<String>,
}

impl ProjectFilter {
    pub(crate) fn matches(&self, record: &ProjectRecord, snapshot: Option<&HealthSnapshot>) -> bool {
        let eq = |want: &Option<String>, have: &Option<String>| match want {
            None => true,
            Some(w) => have.as_deref().is_some_and(|h| h.eq_ignore_ascii_case(w)),
        };
        if !eq(&self.language, &record.primary_language) || !eq(&self.license, &record.license) {
            return false;
        }
        if let Some(min) = self.min_criticality {
            if snapshot.is_none_or(|s| s.criticality < min) {
                return false;
            }
        }
        if self.critical_only && !snapshot.is_some_and(|s| s.is_critical) {
            return false;
        }
        if let Some(text) = &self.text {
            let needle = text.to_lowercase();
            let in_name = record.project.name().contains(&needle);
            let in_description = record
                .description
                .as_deref()
                .is_some_and(|d| d.to_lowercase().contains(&needle));
            if !in_name && !in_description {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectSort {
    #[default]
    CriticalityDesc,
    NameAsc,
}

impl ProjectSort {
    pub fn as_str(self) -> &'static str {
        match self {
            ProjectSort::CriticalityDesc => "criticality_desc",
            ProjectSort::NameAsc => "name_asc",
        }
    }
}

impl std::str::FromStr for ProjectSort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "criticality_desc" => Ok(ProjectSort::CriticalityDesc),
            "name_asc" => Ok(ProjectSort::NameAsc),
            other => Err(format!("unknown sort `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageRequest {
    pub offset: usize,
    pub limit: usize,
}

impl Default for PageRequest {
    fn default() -> Self {
        PageRequest { offset: 0, limit: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectSummary {
    pub record: ProjectRecord,
    pub snapshot: Option<HealthSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectPage {
    pub total: usize,
    pub items: Vec<ProjectSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcosystemSummary {
    pub project_count: u64,
    pub critical_count: u64,
    /// Ten equal-width bins over [0, 1]; empty when nothing has been scored.
    pub criticality_histogram: Vec<u64>,
    pub category_means: BTreeMap<Focus, f64>,
}

pub const HISTOGRAM_BINS: usize = 10;

pub fn histogram_bin(criticality: f64) -> usize {
    ((criticality * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}
