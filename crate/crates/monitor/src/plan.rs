use std::collections::BTreeMap;
use std::time::Duration;

use crossd_core::time::Timestamp;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("critical cadence ({critical:?}) must not exceed normal cadence ({normal:?})")]
    CadenceOrder { normal: Duration, critical: Duration },
    #[error("cadences must be non-zero")]
    ZeroCadence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub cadence: Duration,
    pub next_due: Timestamp,
}

/// When each tracked project is next due for a refresh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefreshPlan {
    normal: Duration,
    critical: Duration,
    entries: BTreeMap<String, PlanEntry>,
}

impl Default for RefreshPlan {
    fn default() -> Self {
        RefreshPlan {
            normal: Duration::from_secs(24 * 3600),
            critical: Duration::from_secs(6 * 3600),
            entries: BTreeMap::new(),
        }
    }
}

impl RefreshPlan {
    pub fn new(normal: Duration, critical: Duration) -> Result<Self, PlanError> {
        if normal.is_zero() || critical.is_zero() {
            return Err(PlanError::ZeroCadence);
        }
        if critical > normal {
            return Err(PlanError::CadenceOrder { normal, critical });
        }
        Ok(RefreshPlan {
            normal,
            critical,
            entries: BTreeMap::new(),
        })
    }

    pub fn cadence_for(&self, is_critical: bool) -> Duration {
        if is_critical {
            self.critical
        } else {
            self.normal
        }
    }

    /// Adds a project (or updates its cadence), due at `next_due`. An
    /// already tracked project keeps its schedule unless it becomes due
    /// earlier under the new cadence.
    pub fn track(&mut self, project: &str, is_critical: bool, next_due: Timestamp) {
        let cadence = self.cadence_for(is_critical);
        self.entries
            .entry(project.to_string())
            .and_modify(|e| {
                e.cadence = cadence;
                e.next_due = e.next_due.min(next_due);
            })
            .or_insert(PlanEntry { cadence, next_due });
    }

    pub fn entry(&self, project: &str) -> Option<&PlanEntry> {
        self.entries.get(project)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &PlanEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Projects due at `now`, ascending by id. Each is rescheduled to
    /// `now + cadence`.
    pub fn tick(&mut self, now: Timestamp) -> Vec<String> {
        let mut due = Vec::new();
        for (project, entry) in &mut self.entries {
            if entry.next_due <= now {
                let step = chrono::Duration::from_std(entry.cadence).unwrap_or(chrono::Duration::MAX);
                entry.next_due = now.checked_add_signed(step).unwrap_or(now).max(entry.next_due);
                due.push(project.clone());
            }
        }
        due
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn t(secs: i64) -> Timestamp {
        Utc.timestamp_opt(1_700_000_000 + secs, 0).unwrap()
    }

    #[test]
    fn due_rule() {
        let mut plan = RefreshPlan::default();
        plan.track("github:demo/b", false, t(0));
        plan.track("github:demo/a", true, t(0));
        assert!(plan.tick(t(-1)).is_empty());
        assert_eq!(plan.tick(t(0)), ["github:demo/a", "github:demo/b"]);
        assert_eq!(plan.entry("github:demo/a").unwrap().next_due, t(6 * 3600));
        assert_eq!(plan.entry("github:demo/b").unwrap().next_due, t(24 * 3600));
        assert!(plan.tick(t(1)).is_empty());
    }

    #[test]
    fn anchored_to_now() {
        let mut plan = RefreshPlan::default();
        plan.track("github:demo/a", false, t(0));
        plan.tick(t(100_000));
        assert_eq!(plan.entry("github:demo/a").unwrap().next_due, t(100_000 + 86_400));
    }

    #[test]
    fn cadence_order_checked() {
        assert!(RefreshPlan::new(Duration::from_secs(60), Duration::from_secs(120)).is_err());
        assert!(RefreshPlan::new(Duration::ZERO, Duration::ZERO).is_err());
        assert!(RefreshPlan::new(Duration::from_secs(60), Duration::from_secs(60)).is_ok());
    }

    proptest! {
        #[test]
        fn next_due_never_decreases(
            steps in proptest::collection::vec((0i64..200_000, any::<bool>()), 1..60),
        ) {
            let mut plan = RefreshPlan::default();
            let ids = ["github:demo/a", "github:demo/b", "gitlab:demo/c"];
            for (i, id) in ids.iter().enumerate() {
                plan.track(id, i == 0, t(i as i64 * 1000));
            }
            let mut now = t(0);
            let mut last: Vec<Timestamp> = ids.iter().map(|id| plan.entry(id).unwrap().next_due).collect();
            for (advance, flip) in steps {
                now += chrono::Duration::seconds(advance);
                if flip {
                    let due = plan.entry(ids[1]).unwrap().next_due;
                    plan.track(ids[1], true, due);
                }
                plan.tick(now);
                for (i, id) in ids.iter().enumerate() {
                    let due = plan.entry(id).unwrap().next_due;
                    prop_assert!(due >= last[i]);
                    last[i] = due;
                }
            }
        }
    }
}
