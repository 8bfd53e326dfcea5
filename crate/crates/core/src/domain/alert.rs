use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ProjectRef, ValidationError};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleId {
    NewHighVuln,
    BecameCritical,
    ActivityDrop,
    LicenseChanged,
}

impl RuleId {
    pub const ALL: [RuleId; 4] = [
        RuleId::NewHighVuln,
        RuleId::BecameCritical,
        RuleId::ActivityDrop,
        RuleId::LicenseChanged,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::NewHighVuln => "NEW_HIGH_VULN",
            RuleId::BecameCritical => "BECAME_CRITICAL",
            RuleId::ActivityDrop => "ACTIVITY_DROP",
            RuleId::LicenseChanged => "LICENSE_CHANGED",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleId {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| ValidationError::invalid("rules", format!("unknown rule `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delivery {
    Webhook(String),
    LogSink,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatchlistSubscription {
    pub id: String,
    pub subscriber: String,
    pub projects: BTreeSet<String>,
    pub rules: BTreeSet<RuleId>,
    pub delivery: Delivery,
}

impl WatchlistSubscription {
    pub fn validate(&self) -> Result<(), ValidationError> {
        if self.id.trim().is_empty() {
            return Err(ValidationError::Empty { field: "id" });
        }
        if self.subscriber.trim().is_empty() {
            return Err(ValidationError::Empty { field: "subscriber" });
        }
        if self.projects.is_empty() {
            return Err(ValidationError::Empty { field: "projects" });
        }
        for p in &self.projects {
            let r = ProjectRef::parse(p)?;
            if r.canonical_id() != p {
                return Err(ValidationError::invalid(
                    "projects",
                    format!("`{p}` is not canonical (expected `{r}`)"),
                ));
            }
        }
        if self.rules.is_empty() {
            return Err(ValidationError::Empty { field: "rules" });
        }
        if let Delivery::Webhook(uri) = &self.delivery {
            if !(uri.starts_with("http://") || uri.starts_with("https://")) {
                return Err(ValidationError::invalid("delivery", "webhook must be an http(s) URI"));
            }
        }
        Ok(())
    }

    pub fn watches(&self, project: &str, rule: RuleId) -> bool {
        self.projects.contains(project) && self.rules.contains(&rule)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryState {
    Pending,
    Delivered,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub id: String,
    pub subscription_id: String,
    pub project: String,
    pub rule: RuleId,
    pub triggered_at: Timestamp,
    pub payload: serde_json::Value,
    pub delivery_state: DeliveryState,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub() -> WatchlistSubscription {
        WatchlistSubscription {
            id: "wl-1".into(),
            subscriber: "ops".into(),
            projects: ["github:demo/alpha".to_string()].into(),
            rules: [RuleId::NewHighVuln].into(),
            delivery: Delivery::LogSink,
        }
    }

    #[test]
    fn empty_projects_rejected() {
        let mut s = sub();
        assert!(s.validate().is_ok());
        s.projects.clear();
        assert_eq!(s.validate().unwrap_err().field(), Some("projects"));
    }

    #[test]
    fn non_canonical_project_rejected() {
        let mut s = sub();
        s.projects = ["github:Demo/alpha".to_string()].into();
        assert!(s.validate().is_err());
    }

    #[test]
    fn rule_id_wire_names() {
        assert_eq!(serde_json::to_string(&RuleId::NewHighVuln).unwrap(), "\"NEW_HIGH_VULN\"");
        assert_eq!("ACTIVITY_DROP".parse::<RuleId>().unwrap(), RuleId::ActivityDrop);
        assert_eq!(serde_json::to_string(&Delivery::LogSink).unwrap(), "\"log_sink\"");
    }
}
