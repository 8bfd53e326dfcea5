//! Offline fixture bundles.
//!
//! A corpus directory holds one subdirectory per project, named
//! `{platform}__{owner}__{name}`, containing:
//!
//! - `project.json`: a [`ProjectRecord`]
//! - `stats.json`: a [`RepoStats`]
//! - `deps.json`: an array of [`DependencyEdge`]s (optional)
//! - `vulns/*.json`: OSV documents (optional)
//! - `attestations.json`: an array of [`Attestation`]s (optional)

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crossd_core::{
    Attestation, DependencyEdge, MetricRegistry, Platform, ProjectRecord, ProjectRef, RepoStats, ValidationError,
    VulnerabilityRecord,
};
use thiserror::Error;

use crate::{ingest_osv_document, parse_json, SchemaError};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("no fixture for {project} under {root}")]
    NotFound { project: String, root: PathBuf },
    #[error("{0}")]
    Schema(#[from] SchemaError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureData {
    pub record: ProjectRecord,
    pub stats: RepoStats,
    pub dependencies: Vec<DependencyEdge>,
    pub vulnerabilities: Vec<VulnerabilityRecord>,
    pub attestations: Vec<Attestation>,
}

pub fn fixture_dir_name(project: &ProjectRef) -> String {
    format!("{}__{}__{}", project.platform().as_str(), project.owner(), project.name())
}

fn parse_dir_name(name: &str) -> Option<ProjectRef> {
    let mut parts = name.split("__");
    let platform: Platform = parts.next()?.parse().ok()?;
    let owner = parts.next()?;
    let repo = parts.next()?;
    if parts.next().is_some() {
        return None;
    }
    crossd_core::canonicalize(platform, owner, repo).ok()
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FixtureError + '_ {
    move |source| FixtureError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_optional(path: &Path) -> Result<Option<String>, FixtureError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(Some(text)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(path)(e)),
    }
}

fn invalid(path: &Path, err: ValidationError) -> FixtureError {
    SchemaError::new(err.field().unwrap_or_default(), err.to_string()).in_file(path).into()
}

/// Projects present in a corpus, sorted by canonical id. Directories whose
/// name does not follow the naming scheme are skipped.
pub fn list_fixture_projects(root: &Path) -> Result<Vec<ProjectRef>, FixtureError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        if !entry.path().is_dir() {
            continue;
        }
        if let Some(project) = entry.file_name().to_str().and_then(parse_dir_name) {
            out.push(project);
        }
    }
    out.sort();
    Ok(out)
}

/// Loads and validates one project's bundle.
pub fn collect_fixture(root: &Path, project: &ProjectRef) -> Result<FixtureData, FixtureError> {
    let dir = root.join(fixture_dir_name(project));
    if !dir.is_dir() {
        return Err(FixtureError::NotFound {
            project: project.canonical_id().to_string(),
            root: root.to_path_buf(),
        });
    }
    let id = project.canonical_id();
    let registry = MetricRegistry::bundled();

    let path = dir.join("project.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let record: ProjectRecord = parse_json(&text).map_err(|e| e.in_file(&path))?;
    record.validate().map_err(|e| invalid(&path, e))?;
    if record.canonical_id() != id {
        return Err(SchemaError::new("ref.canonical_id", format!("expected `{id}`, found `{}`", record.canonical_id()))
            .in_file(&path)
            .into());
    }

    let path = dir.join("stats.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let stats: RepoStats = parse_json(&text).map_err(|e| e.in_file(&path))?;
    stats.validate().map_err(|e| invalid(&path, e))?;
    if stats.project != id {
        return Err(SchemaError::new("project", format!("expected `{id}`, found `{}`", stats.project))
            .in_file(&path)
            .into());
    }

    let path = dir.join("deps.json");
    let dependencies: Vec<DependencyEdge> = match read_optional(&path)? {
        Some(text) => parse_json(&text).map_err(|e| e.in_file(&path))?,
        None => Vec::new(),
    };
    for edge in &dependencies {
        edge.validate().map_err(|e| invalid(&path, e))?;
    }

    let vuln_dir = dir.join("vulns");
    let mut vulnerabilities = Vec::new();
    if vuln_dir.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(&vuln_dir)
            .map_err(io_err(&vuln_dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for path in files {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let vuln = ingest_osv_document(&text).map_err(|e| e.in_file(&path))?;
            vuln.validate().map_err(|e| invalid(&path, e))?;
            vulnerabilities.push(vuln);
        }
    }

    let path = dir.join("attestations.json");
    let attestations: Vec<Attestation> = match read_optional(&path)? {
        Some(text) => parse_json(&text).map_err(|e| e.in_file(&path))?,
        None => Vec::new(),
    };
    for a in &attestations {
        a.validate(registry).map_err(|e| invalid(&path, e))?;
        if a.project != id {
            return Err(SchemaError::new("project", format!("attestation `{}` targets `{}`", a.id, a.project))
                .in_file(&path)
                .into());
        }
    }

    Ok(FixtureData {
        record,
        stats,
        dependencies,
        vulnerabilities,
        attestations,
    })
}
