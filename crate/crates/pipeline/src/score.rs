use crossd_core::metrics::{assess_project, vulns_as_of, ProjectInputs, ScoringModel};
use crossd_core::time::Timestamp;
use crossd_core::{Alert, HealthSnapshot};
use crossd_monitor::{process_transition, Deliverer, RuleConfig};
use crossd_store::{HealthStore, PutOutcome};

use crate::PipelineError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreReport {
    pub snapshots: Vec<HealthSnapshot>,
    pub outcome: PutOutcome,
}

fn targets(store: &HealthStore, only: Option<&[String]>) -> Result<Vec<String>, PipelineError> {
    match only {
        None => Ok(store.project_ids()),
        Some(ids) => {
            for id in ids {
                if store.project_record(id, None).is_none() {
                    return Err(PipelineError::UnknownProject(id.clone()));
                }
            }
            Ok(ids.to_vec())
        }
    }
}

fn score_one(
    store: &HealthStore,
    model: &ScoringModel<'_>,
    project: &str,
    as_of: Timestamp,
) -> Result<(HealthSnapshot, PutOutcome), PipelineError> {
    let stats = store.stats(project, Some(as_of)).ok_or_else(|| PipelineError::NoStats {
        project: project.to_string(),
        as_of,
    })?;
    let report = store.dependency_report(project, as_of);
    let vulns = store
        .vulnerabilities(project, Some(as_of))
        .map(|set| vulns_as_of(&set.vulnerabilities, as_of))
        .unwrap_or_default();
    let attestations = store.attestations(project);
    let inputs = ProjectInputs {
        stats: &stats,
        report: &report,
        vulns: &vulns,
        attestations: &attestations,
    };
    let assessment = assess_project(model, &inputs, as_of)?;
    let mut outcome = store.put_observations(assessment.observations)?;
    outcome += store.put_snapshot(assessment.snapshot.clone())?;
    Ok((assessment.snapshot, outcome))
}

/// Scores every stored project (or the listed ones) as of `as_of` and
/// stores observations and snapshots. Re-scoring at the same instant
/// deduplicates.
pub fn score_projects(
    store: &HealthStore,
    model: &ScoringModel<'_>,
    only: Option<&[String]>,
    as_of: Timestamp,
) -> Result<ScoreReport, PipelineError> {
    let mut report = ScoreReport::default();
    for project in targets(store, only)? {
        let (snapshot, outcome) = score_one(store, model, &project, as_of)?;
        report.outcome += outcome;
        report.snapshots.push(snapshot);
    }
    report.snapshots.sort_by(|a, b| a.project.cmp(&b.project));
    Ok(report)
}

/// [`score_projects`] followed by change detection and alert delivery for
/// each new snapshot.
pub async fn score_and_monitor(
    store: &HealthStore,
    model: &ScoringModel<'_>,
    only: Option<&[String]>,
    as_of: Timestamp,
    deliverer: &Deliverer,
    rules: &RuleConfig,
) -> Result<(ScoreReport, Vec<Alert>), PipelineError> {
    let report = score_projects(store, model, only, as_of)?;
    let mut alerts = Vec::new();
    for snapshot in &report.snapshots {
        alerts.extend(process_transition(store, deliverer, rules, snapshot).await?);
    }
    Ok((report, alerts))
}
