use chrono::Utc;
use crossd_core::metrics::vulns_as_of;
use crossd_core::{Alert, HealthSnapshot, MetricValue};
use crossd_store::{DeliveryUpdate, HealthStore, StoreError, StoreRecord};

use crate::{evaluate_rules, fan_out, Deliverer, ProjectState, RuleConfig};

/// Reconstructs what the rules see for `snapshot` from the store.
pub fn project_state(store: &HealthStore, snapshot: HealthSnapshot) -> ProjectState {
    let at = snapshot.computed_at;
    let vulns = store
        .vulnerabilities(&snapshot.project, Some(at))
        .map(|set| {
            vulns_as_of(&set.vulnerabilities, at)
                .into_iter()
                .filter(|v| v.is_open_at(at))
                .collect()
        })
        .unwrap_or_default();
    let commits_90d = store
        .observations_at(&snapshot.project, at)
        .into_iter()
        .find(|o| o.metric_id == "commits_90d")
        .and_then(|o| match o.value {
            MetricValue::Number(n) => Some(n),
            _ => None,
        });
    ProjectState {
        record: store.project_record(&snapshot.project, Some(at)),
        vulns,
        commits_90d,
        snapshot,
    }
}

/// Evaluates the transition into `snapshot` (from the latest earlier
/// snapshot of the same project), persists the resulting alerts and
/// delivers them. Returns the alerts with their final delivery state.
pub async fn process_transition(
    store: &HealthStore,
    deliverer: &Deliverer,
    rules: &RuleConfig,
    snapshot: &HealthSnapshot,
) -> Result<Vec<Alert>, StoreError> {
    let prev = store
        .latest_snapshot_before(&snapshot.project, snapshot.computed_at)
        .map(|s| project_state(store, s));
    let next = project_state(store, snapshot.clone());
    let findings = evaluate_rules(prev.as_ref(), &next, rules);
    if findings.is_empty() {
        return Ok(Vec::new());
    }
    let subscriptions = store.watchlists();
    let mut known = store.alert_ids();
    let alerts = fan_out(&findings, &subscriptions, &mut known);
    if alerts.is_empty() {
        return Ok(Vec::new());
    }
    store.put_batch(alerts.iter().cloned().map(StoreRecord::Alert).collect())?;

    let delivered = deliverer.deliver_all(alerts, &subscriptions).await;
    let now = Utc::now();
    let updates = delivered
        .iter()
        .map(|(alert, outcome)| {
            StoreRecord::AlertDelivery(DeliveryUpdate {
                alert_id: alert.id.clone(),
                state: outcome.state,
                attempts: outcome.attempts,
                at: now,
                error: outcome.error.clone(),
            })
        })
        .collect();
    store.put_batch(updates)?;

    let mut out: Vec<Alert> = delivered
        .into_iter()
        .map(|(mut alert, outcome)| {
            alert.delivery_state = outcome.state;
            alert
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}
