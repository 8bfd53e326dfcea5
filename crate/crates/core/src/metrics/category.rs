use std::collections::BTreeMap;

use super::{normalize_metric, EngineError, ParamsError};
use crate::domain::{Direction, Focus, MetricObservation};
use crate::registry::MetricRegistry;

/// Weighted mean of the normalized contributions of one focus.
///
/// Metrics are visited in registry order. Lower-is-better metrics contribute
/// `1 - n`, neutral metrics and text values are skipped, and weights are
/// renormalized over the metrics actually present. `None` when nothing of
/// this focus (with positive weight) was observed. When several observations
/// of one metric are given, the latest one counts.
pub fn category_score(
    observations: &[MetricObservation],
    registry: &MetricRegistry,
    weights: &BTreeMap<String, f64>,
    focus: Focus,
) -> Result<Option<f64>, EngineError> {
    for id in weights.keys() {
        let def = registry
            .get(id)
            .ok_or_else(|| ParamsError::UnknownMetric(id.clone()))?;
        if def.focus != focus {
            return Err(ParamsError::ForeignWeight {
                metric_id: id.clone(),
                actual: def.focus.as_str(),
                requested: focus.as_str(),
            }
            .into());
        }
    }

    let mut weighted = 0.0;
    let mut total = 0.0;
    for def in registry.definitions().filter(|d| d.focus == focus) {
        if def.direction == Direction::Neutral {
            continue;
        }
        let weight = weights.get(&def.id).copied().unwrap_or(0.0);
        if weight <= 0.0 {
            continue;
        }
        let latest = observations
            .iter()
            .filter(|o| o.metric_id == def.id)
            .filter_map(|o| o.value.as_f64().map(|v| (o.observed_at, v)))
            .max_by_key(|(at, _)| *at);
        let Some((_, raw)) = latest else { continue };
        let n = normalize_metric(raw, &def.normalization).map_err(|source| EngineError::Domain {
            metric_id: def.id.clone(),
            source,
        })?;
        let contribution = match def.direction {
            Direction::HigherIsBetter => n,
            Direction::LowerIsBetter => 1.0 - n,
            Direction::Neutral => unreachable!(),
        };
        weighted += weight * contribution;
        total += weight;
    }
    Ok((total > 0.0).then(|| (weighted / total).clamp(0.0, 1.0)))
}
