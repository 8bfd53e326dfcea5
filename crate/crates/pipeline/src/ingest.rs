use std::path::Path;

use crossd_collectors::{collect_fixture, list_fixture_projects, FixtureData};
use crossd_core::ProjectRef;
use crossd_store::{DependencySet, HealthStore, PutOutcome, StoreRecord, VulnerabilitySet};

use crate::PipelineError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub projects: Vec<String>,
    pub outcome: PutOutcome,
}

/// Store records for one fixture bundle. Dependency and vulnerability sets
/// are stamped with the statistics' collection instant.
pub fn fixture_records(data: FixtureData) -> Vec<StoreRecord> {
    let project = data.record.project.canonical_id().to_string();
    let fetched_at = data.stats.fetched_at;
    let mut out = vec![
        StoreRecord::Project(data.record),
        StoreRecord::Stats(data.stats),
        StoreRecord::Dependencies(DependencySet {
            project: project.clone(),
            fetched_at,
            edges: data.dependencies,
        }),
        StoreRecord::Vulnerabilities(VulnerabilitySet {
            project,
            fetched_at,
            vulnerabilities: data.vulnerabilities,
        }),
    ];
    out.extend(data.attestations.into_iter().map(StoreRecord::Attestation));
    out
}

/// Reads every bundle under `root` (or just `only`) and writes them in one
/// atomic batch. Nothing is written if any bundle fails validation.
pub fn ingest_fixtures(
    store: &HealthStore,
    root: &Path,
    only: Option<&ProjectRef>,
) -> Result<IngestReport, PipelineError> {
    let targets = match only {
        Some(p) => vec![p.clone()],
        None => list_fixture_projects(root)?,
    };
    let mut batch = Vec::new();
    let mut projects = Vec::new();
    for project in &targets {
        let data = collect_fixture(root, project)?;
        projects.push(project.canonical_id().to_string());
        batch.extend(fixture_records(data));
    }
    let outcome = store.put_batch(batch)?;
    tracing::info!(projects = projects.len(), inserted = outcome.inserted, deduplicated = outcome.deduplicated, "fixtures ingested");
    Ok(IngestReport { projects, outcome })
}
