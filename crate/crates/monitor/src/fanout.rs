use std::collections::BTreeSet;

use crossd_core::{Alert, DeliveryState, RuleId, WatchlistSubscription};
use sha2::{Digest, Sha256};

use crate::Finding;

/// Stable id of the alert for one subscription, project, rule and snapshot.
pub fn alert_id(subscription_id: &str, project: &str, rule: RuleId, snapshot_digest: &str) -> String {
    let mut h = Sha256::new();
    for part in [subscription_id, project, rule.as_str(), snapshot_digest] {
        h.update(part.as_bytes());
        h.update([0x1f]);
    }
    hex::encode(&h.finalize()[..16])
}

/// One pending alert per matching (finding, subscription) pair whose id is
/// not in `known`. New ids are added to `known`.
pub fn fan_out(findings: &[Finding], subscriptions: &[WatchlistSubscription], known: &mut BTreeSet<String>) -> Vec<Alert> {
    let mut alerts = Vec::new();
    for finding in findings {
        for sub in subscriptions.iter().filter(|s| s.watches(&finding.project, finding.rule)) {
            let id = alert_id(&sub.id, &finding.project, finding.rule, &finding.snapshot_digest);
            if !known.insert(id.clone()) {
                continue;
            }
            alerts.push(Alert {
                id,
                subscription_id: sub.id.clone(),
                project: finding.project.clone(),
                rule: finding.rule,
                triggered_at: finding.triggered_at,
                payload: finding.payload.clone(),
                delivery_state: DeliveryState::Pending,
            });
        }
    }
    alerts
}
