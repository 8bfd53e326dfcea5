use crossd_collectors::{collect_code_host, CollectOptions, HostEndpoint};
use crossd_core::metrics::ScoringModel;
use crossd_core::{Alert, ProjectRef};
use crossd_monitor::{Deliverer, RuleConfig};
use crossd_store::{HealthStore, PutOutcome, StoreRecord};

use crate::score::{score_and_monitor, ScoreReport};
use crate::PipelineError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefreshReport {
    pub collected: PutOutcome,
    pub score: ScoreReport,
    pub alerts: Vec<Alert>,
}

/// Collects fresh metadata for one project from its code host, stores it,
/// then scores the project at the collection instant. Dependency and
/// vulnerability facts carry over from the latest stored sets.
pub async fn refresh_live(
    store: &HealthStore,
    model: &ScoringModel<'_>,
    project: &ProjectRef,
    endpoint: HostEndpoint,
    options: CollectOptions,
    deliverer: &Deliverer,
    rules: &RuleConfig,
) -> Result<RefreshReport, PipelineError> {
    let result = collect_code_host(project, endpoint, None, options).await?;
    let as_of = result.stats.fetched_at;
    let collected = store.put_batch(vec![StoreRecord::Project(result.record), StoreRecord::Stats(result.stats)])?;
    let only = [project.canonical_id().to_string()];
    let (score, alerts) = score_and_monitor(store, model, Some(&only), as_of, deliverer, rules).await?;
    Ok(RefreshReport { collected, score, alerts })
}
