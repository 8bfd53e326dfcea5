use std::collections::BTreeMap;

use crate::domain::{Attestation, MetricKind, MetricObservation, MetricValue};
use crate::registry::MetricRegistry;
use crate::time::Timestamp;

/// Qualitative observations from attestations, for critical projects only.
///
/// Per (project, metric) the newest attestation that is live at `as_of`
/// wins; ties on `asserted_at` go to the greater id. The observation keeps
/// the attestation's own timestamp and uses its id as source.
pub fn apply_attestations(
    attestations: &[Attestation],
    registry: &MetricRegistry,
    critical: bool,
    as_of: Timestamp,
) -> Vec<MetricObservation> {
    if !critical {
        return Vec::new();
    }
    let mut newest: BTreeMap<(&str, &str), &Attestation> = BTreeMap::new();
    for a in attestations {
        let qualitative = registry
            .get(&a.metric_id)
            .is_some_and(|d| d.kind == MetricKind::Qualitative);
        if !qualitative || !a.is_live_at(as_of) {
            continue;
        }
        newest
            .entry((a.project.as_str(), a.metric_id.as_str()))
            .and_modify(|cur| {
                if (a.asserted_at, &a.id) > (cur.asserted_at, &cur.id) {
                    *cur = a;
                }
            })
            .or_insert(a);
    }
    newest
        .into_values()
        .map(|a| MetricObservation {
            metric_id: a.metric_id.clone(),
            project: a.project.clone(),
            value: MetricValue::Ordinal(a.value),
            observed_at: a.asserted_at,
            source: a.id.clone(),
        })
        .collect()
}
