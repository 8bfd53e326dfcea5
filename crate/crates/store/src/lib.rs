//! Durable, append-only record of project facts, observations, snapshots,
//! watchlists and alerts.
//!
//! On disk a store is a directory of newline-delimited JSON segment files,
//! one per project plus `_global.ndjson` for watchlists and alerts. Nothing
//! is ever rewritten; the in-memory index is rebuilt from the segments on
//! open. A torn final line (from a crash mid-append) is discarded.

mod query;
mod record;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::ops::Bound;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use crossd_core::time::Timestamp;
use crossd_core::{
    Alert, Attestation, DependencyEdge, Focus, HealthSnapshot, MetricObservation, MetricRegistry, ProjectRecord,
    DependencyReport, RepoStats, VulnerabilityRecord, WatchlistSubscription,
};
use crossd_core::metrics::{dependency_analysis, open_vulnerable_packages, vulns_as_of};
use thiserror::Error;

pub use query::{
    histogram_bin, EcosystemSummary, PageRequest, ProjectFilter, ProjectPage, ProjectSort, ProjectSummary,
    HISTOGRAM_BINS, MAX_PAGE_LIMIT,
};
pub use record::{DeliveryUpdate, DependencySet, StoreRecord, VulnerabilitySet, WatchlistTombstone};

use record::{ts_key, Kind, RecordKey, SEP};

const GLOBAL_SEGMENT: &str = "_global";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: corrupt segment record: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("record {index} invalid: {message}")]
    Validation {
        index: usize,
        field: Option<String>,
        message: String,
    },
    #[error("a different record is already stored under {key}")]
    Conflict { key: String },
    #[error("line {line}: {message}")]
    Import { line: usize, message: String },
    #[error("invalid time range: from is after to")]
    InvalidRange,
    #[error("page limit {0} exceeds {MAX_PAGE_LIMIT}")]
    LimitTooLarge(usize),
}

impl StoreError {
    /// Errors caused by the caller's input rather than the environment.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, StoreError::Io { .. } | StoreError::Corrupt { .. })
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PutOutcome {
    pub inserted: usize,
    pub deduplicated: usize,
}

impl std::ops::AddAssign for PutOutcome {
    fn add_assign(&mut self, rhs: Self) {
        self.inserted += rhs.inserted;
        self.deduplicated += rhs.deduplicated;
    }
}

struct Inner {
    records: BTreeMap<RecordKey, StoreRecord>,
    files: HashMap<String, File>,
}

pub struct HealthStore {
    dir: Option<PathBuf>,
    inner: RwLock<Inner>,
}

fn segment_name(record: &StoreRecord, key: &RecordKey) -> String {
    match record {
        StoreRecord::Watchlist(_)
        | StoreRecord::WatchlistDeleted(_)
        | StoreRecord::Alert(_)
        | StoreRecord::AlertDelivery(_) => GLOBAL_SEGMENT.to_string(),
        _ => key.project.replace([':', '/'], "__"),
    }
}

fn prefix_range(kind: Kind, project: &str, prefix: &str) -> (Bound<RecordKey>, Bound<RecordKey>) {
    let lo = RecordKey {
        kind,
        project: project.to_string(),
        sort: prefix.to_string(),
    };
    let hi = RecordKey {
        kind,
        project: project.to_string(),
        sort: format!("{prefix}\u{10ffff}"),
    };
    (Bound::Included(lo), Bound::Excluded(hi))
}

impl HealthStore {
    /// A store that lives only in memory.
    pub fn in_memory() -> Self {
        HealthStore {
            dir: None,
            inner: RwLock::new(Inner {
                records: BTreeMap::new(),
                files: HashMap::new(),
            }),
        }
    }

    /// Opens (creating if needed) the store in `dir` and replays its segments.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut segments: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "ndjson"))
            .collect();
        segments.sort();
        let mut records = BTreeMap::new();
        for path in &segments {
            for record in read_segment(path)? {
                records.insert(record.key(), record);
            }
        }
        tracing::debug!(dir = %dir.display(), records = records.len(), "store opened");
        Ok(HealthStore {
            dir: Some(dir),
            inner: RwLock::new(Inner {
                records,
                files: HashMap::new(),
            }),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().expect("store lock poisoned")
    }

    /// Validates and appends a batch atomically: either every new record is
    /// written and indexed, or nothing is. Records identical to stored ones
    /// are counted as deduplicated.
    pub fn put_batch(&self, batch: Vec<StoreRecord>) -> Result<PutOutcome, StoreError> {
        let registry = MetricRegistry::bundled();
        for (index, record) in batch.iter().enumerate() {
            record.validate(registry).map_err(|e| StoreError::Validation {
                index,
                field: e.field().map(str::to_string),
                message: e.to_string(),
            })?;
        }

        let mut inner = self.inner.write().expect("store lock poisoned");
        let mut fresh: BTreeMap<RecordKey, StoreRecord> = BTreeMap::new();
        let mut outcome = PutOutcome::default();
        for record in batch {
            let key = record.key();
            let existing = inner.records.get(&key).or_else(|| fresh.get(&key));
            match existing {
                Some(old) if *old == record => outcome.deduplicated += 1,
                Some(_) => return Err(StoreError::Conflict { key: key.to_string() }),
                None => {
                    fresh.insert(key, record);
                    outcome.inserted += 1;
                }
            }
        }
        if fresh.is_empty() {
            return Ok(outcome);
        }

        if let Some(dir) = self.dir.clone() {
            let mut per_segment: BTreeMap<String, String> = BTreeMap::new();
            for (key, record) in &fresh {
                let line = serde_json::to_string(record).expect("records serialize");
                let buf = per_segment.entry(segment_name(record, key)).or_default();
                buf.push_str(&line);
                buf.push('\n');
            }
            for (segment, text) in per_segment {
                let path = dir.join(format!("{segment}.ndjson"));
                if !inner.files.contains_key(&segment) {
                    let file = OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(&path)
                        .map_err(io_err(&path))?;
                    inner.files.insert(segment.clone(), file);
                }
                let file = inner.files.get_mut(&segment).expect("just inserted");
                file.write_all(text.as_bytes()).map_err(io_err(&path))?;
                file.sync_data().map_err(io_err(&path))?;
            }
        }
        inner.records.extend(fresh);
        Ok(outcome)
    }

    pub fn put_observations(&self, batch: Vec<MetricObservation>) -> Result<PutOutcome, StoreError> {
        self.put_batch(batch.into_iter().map(StoreRecord::Observation).collect())
    }

    pub fn put_snapshot(&self, snapshot: HealthSnapshot) -> Result<PutOutcome, StoreError> {
        self.put_batch(vec![StoreRecord::Snapshot(snapshot)])
    }

    pub fn put_watchlist(&self, subscription: WatchlistSubscription) -> Result<PutOutcome, StoreError> {
        self.put_batch(vec![StoreRecord::Watchlist(subscription)])
    }

    /// Marks a watchlist deleted. Returns false when it does not exist (or is
    /// already deleted).
    pub fn delete_watchlist(&self, id: &str) -> Result<bool, StoreError> {
        if self.watchlist(id).is_none() {
            return Ok(false);
        }
        self.put_batch(vec![StoreRecord::WatchlistDeleted(WatchlistTombstone { id: id.to_string() })])?;
        Ok(true)
    }

    pub fn get_latest_snapshot(&self, project: &str) -> Option<HealthSnapshot> {
        let inner = self.read();
        let range = prefix_range(Kind::Snapshot, project, "");
        inner.records.range(range).next_back().map(|(_, r)| snapshot_of(r))
    }

    /// The latest snapshot computed strictly before `before`.
    pub fn latest_snapshot_before(&self, project: &str, before: Timestamp) -> Option<HealthSnapshot> {
        let inner = self.read();
        let lo = RecordKey {
            kind: Kind::Snapshot,
            project: project.to_string(),
            sort: String::new(),
        };
        let hi = RecordKey {
            kind: Kind::Snapshot,
            project: project.to_string(),
            sort: ts_key(&before),
        };
        inner
            .records
            .range(lo..hi)
            .next_back()
            .map(|(_, r)| snapshot_of(r))
    }

    pub fn snapshots(&self, project: &str) -> Vec<HealthSnapshot> {
        let inner = self.read();
        inner
            .records
            .range(prefix_range(Kind::Snapshot, project, ""))
            .map(|(_, r)| snapshot_of(r))
            .collect()
    }

    /// Observations with `from <= observed_at < to`, ascending by
    /// observed_at then source.
    pub fn query_history(
        &self,
        project: &str,
        metric_id: &str,
        from: Timestamp,
        to: Timestamp,
    ) -> Result<Vec<MetricObservation>, StoreError> {
        if from > to {
            return Err(StoreError::InvalidRange);
        }
        let inner = self.read();
        let key = |t: &Timestamp| RecordKey {
            kind: Kind::Observation,
            project: project.to_string(),
            sort: format!("{metric_id}{SEP}{}", ts_key(t)),
        };
        Ok(inner
            .records
            .range(key(&from)..key(&to))
            .filter_map(|(_, r)| match r {
                StoreRecord::Observation(o) => Some(o.clone()),
                _ => None,
            })
            .collect())
    }

    /// Every observation of a project recorded at exactly `at`.
    pub fn observations_at(&self, project: &str, at: Timestamp) -> Vec<MetricObservation> {
        let inner = self.read();
        inner
            .records
            .range(prefix_range(Kind::Observation, project, ""))
            .filter_map(|(_, r)| match r {
                StoreRecord::Observation(o) if o.observed_at == at => Some(o.clone()),
                _ => None,
            })
            .collect()
    }

    fn latest_as_of<T>(
        &self,
        kind: Kind,
        project: &str,
        as_of: Option<Timestamp>,
        pick: impl Fn(&StoreRecord) -> Option<T>,
    ) -> Option<T> {
        let inner = self.read();
        let lo = Bound::Included(RecordKey {
            kind,
            project: project.to_string(),
            sort: String::new(),
        });
        let hi = match as_of {
            Some(t) => Bound::Included(RecordKey {
                kind,
                project: project.to_string(),
                sort: ts_key(&t),
            }),
            None => prefix_range(kind, project, "").1,
        };
        inner.records.range((lo, hi)).next_back().and_then(|(_, r)| pick(r))
    }

    /// Latest project record (fetched at or before `as_of` when given).
    pub fn project_record(&self, project: &str, as_of: Option<Timestamp>) -> Option<ProjectRecord> {
        self.latest_as_of(Kind::Project, project, as_of, |r| match r {
            StoreRecord::Project(p) => Some(p.clone()),
            _ => None,
        })
    }

    pub fn stats(&self, project: &str, as_of: Option<Timestamp>) -> Option<RepoStats> {
        self.latest_as_of(Kind::Stats, project, as_of, |r| match r {
            StoreRecord::Stats(s) => Some(s.clone()),
            _ => None,
        })
    }

    pub fn dependencies(&self, project: &str, as_of: Option<Timestamp>) -> Option<DependencySet> {
        self.latest_as_of(Kind::Dependencies, project, as_of, |r| match r {
            StoreRecord::Dependencies(d) => Some(d.clone()),
            _ => None,
        })
    }

    pub fn vulnerabilities(&self, project: &str, as_of: Option<Timestamp>) -> Option<VulnerabilitySet> {
        self.latest_as_of(Kind::Vulnerabilities, project, as_of, |r| match r {
            StoreRecord::Vulnerabilities(v) => Some(v.clone()),
            _ => None,
        })
    }

    /// Union of every project's latest known edges, deduplicated.
    pub fn dependency_edges(&self, as_of: Option<Timestamp>) -> Vec<DependencyEdge> {
        let mut edges = BTreeSet::new();
        for project in self.project_ids() {
            if let Some(set) = self.dependencies(&project, as_of) {
                edges.extend(set.edges);
            }
        }
        edges.into_iter().collect()
    }

    /// Dependency counts for `project` over every project's edges known at
    /// `at`, with vulnerable dependencies judged by vulnerabilities open at
    /// `at` across all projects. Dev edges are included.
    pub fn dependency_report(&self, project: &str, at: Timestamp) -> DependencyReport {
        let edges = self.dependency_edges(Some(at));
        let mut vulns: Vec<VulnerabilityRecord> = Vec::new();
        for id in self.project_ids() {
            if let Some(set) = self.vulnerabilities(&id, Some(at)) {
                vulns.extend(set.vulnerabilities);
            }
        }
        let vulnerable = open_vulnerable_packages(&vulns_as_of(&vulns, at), at);
        dependency_analysis(&edges, project, false, &vulnerable)
    }

    pub fn attestations(&self, project: &str) -> Vec<Attestation> {
        let inner = self.read();
        inner
            .records
            .range(prefix_range(Kind::Attestation, project, ""))
            .filter_map(|(_, r)| match r {
                StoreRecord::Attestation(a) => Some(a.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn attestation(&self, project: &str, id: &str) -> Option<Attestation> {
        let inner = self.read();
        let key = RecordKey {
            kind: Kind::Attestation,
            project: project.to_string(),
            sort: id.to_string(),
        };
        match inner.records.get(&key) {
            Some(StoreRecord::Attestation(a)) => Some(a.clone()),
            _ => None,
        }
    }

    /// Canonical ids of all projects with a stored record, ascending.
    pub fn project_ids(&self) -> Vec<String> {
        let inner = self.read();
        let mut ids: Vec<String> = Vec::new();
        let lo = RecordKey {
            kind: Kind::Project,
            project: String::new(),
            sort: String::new(),
        };
        let hi = RecordKey {
            kind: Kind::Stats,
            project: String::new(),
            sort: String::new(),
        };
        for (key, _) in inner.records.range(lo..hi) {
            if ids.last() != Some(&key.project) {
                ids.push(key.project.clone());
            }
        }
        ids
    }

    pub fn list_projects(
        &self,
        filter: &ProjectFilter,
        sort: ProjectSort,
        page: PageRequest,
    ) -> Result<ProjectPage, StoreError> {
        if page.limit > MAX_PAGE_LIMIT {
            return Err(StoreError::LimitTooLarge(page.limit));
        }
        let mut rows: Vec<ProjectSummary> = self
            .project_ids()
            .into_iter()
            .filter_map(|id| {
                let record = self.project_record(&id, None)?;
                let snapshot = self.get_latest_snapshot(&id);
                filter
                    .matches(&record, snapshot.as_ref())
                    .then_some(ProjectSummary { record, snapshot })
            })
            .collect();
        match sort {
            ProjectSort::CriticalityDesc => rows.sort_by(|a, b| {
                let ca = a.snapshot.as_ref().map(|s| s.criticality);
                let cb = b.snapshot.as_ref().map(|s| s.criticality);
                // unscored projects sort last
                cb.partial_cmp(&ca)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.record.canonical_id().cmp(b.record.canonical_id()))
            }),
            ProjectSort::NameAsc => rows.sort_by(|a, b| {
                a.record
                    .project
                    .name()
                    .cmp(b.record.project.name())
                    .then_with(|| a.record.canonical_id().cmp(b.record.canonical_id()))
            }),
        }
        let total = rows.len();
        let items = rows.into_iter().skip(page.offset).take(page.limit).collect();
        Ok(ProjectPage { total, items })
    }

    /// Aggregates over each project's latest snapshot.
    pub fn ecosystem_summary(&self) -> EcosystemSummary {
        let latest: Vec<HealthSnapshot> = {
            let inner = self.read();
            let mut by_project: BTreeMap<&str, &StoreRecord> = BTreeMap::new();
            let lo = RecordKey {
                kind: Kind::Snapshot,
                project: String::new(),
                sort: String::new(),
            };
            let hi = RecordKey {
                kind: Kind::Watchlist,
                project: String::new(),
                sort: String::new(),
            };
            for (key, record) in inner.records.range(lo..hi) {
                by_project.insert(&key.project, record);
            }
            by_project.values().map(|r| snapshot_of(r)).collect()
        };
        let mut histogram = if latest.is_empty() {
            Vec::new()
        } else {
            vec![0u64; HISTOGRAM_BINS]
        };
        let mut sums: BTreeMap<Focus, (f64, u64)> = BTreeMap::new();
        for s in &latest {
            histogram[histogram_bin(s.criticality)] += 1;
            for (focus, score) in &s.category_scores {
                let e = sums.entry(*focus).or_default();
                e.0 += score;
                e.1 += 1;
            }
        }
        EcosystemSummary {
            project_count: latest.len() as u64,
            critical_count: latest.iter().filter(|s| s.is_critical).count() as u64,
            criticality_histogram: histogram,
            category_means: sums.into_iter().map(|(f, (sum, n))| (f, sum / n as f64)).collect(),
        }
    }

    /// A live (not deleted) watchlist.
    pub fn watchlist(&self, id: &str) -> Option<WatchlistSubscription> {
        let inner = self.read();
        let global = |kind| RecordKey {
            kind,
            project: String::new(),
            sort: id.to_string(),
        };
        if inner.records.contains_key(&global(Kind::WatchlistDeleted)) {
            return None;
        }
        match inner.records.get(&global(Kind::Watchlist)) {
            Some(StoreRecord::Watchlist(w)) => Some(w.clone()),
            _ => None,
        }
    }

    pub fn watchlists(&self) -> Vec<WatchlistSubscription> {
        let inner = self.read();
        let deleted: BTreeSet<&str> = inner
            .records
            .range(prefix_range(Kind::WatchlistDeleted, "", ""))
            .map(|(k, _)| k.sort.as_str())
            .collect();
        inner
            .records
            .range(prefix_range(Kind::Watchlist, "", ""))
            .filter_map(|(k, r)| match r {
                StoreRecord::Watchlist(w) if !deleted.contains(k.sort.as_str()) => Some(w.clone()),
                _ => None,
            })
            .collect()
    }

    /// All alerts, each with its latest delivery state applied.
    pub fn alerts(&self) -> Vec<Alert> {
        let inner = self.read();
        let mut latest: BTreeMap<&str, &DeliveryUpdate> = BTreeMap::new();
        for (_, r) in inner.records.range(prefix_range(Kind::AlertDelivery, "", "")) {
            if let StoreRecord::AlertDelivery(d) = r {
                let newer = latest.get(d.alert_id.as_str()).is_none_or(|cur| d.at >= cur.at);
                if newer {
                    latest.insert(&d.alert_id, d);
                }
            }
        }
        inner
            .records
            .range(prefix_range(Kind::Alert, "", ""))
            .filter_map(|(_, r)| match r {
                StoreRecord::Alert(a) => {
                    let mut a = a.clone();
                    if let Some(d) = latest.get(a.id.as_str()) {
                        a.delivery_state = d.state;
                    }
                    Some(a)
                }
                _ => None,
            })
            .collect()
    }

    pub fn alert_ids(&self) -> BTreeSet<String> {
        let inner = self.read();
        inner
            .records
            .range(prefix_range(Kind::Alert, "", ""))
            .map(|(k, _)| k.sort.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.read().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every record, in a stable total order, one JSON document per line.
    pub fn export<W: Write>(&self, mut out: W) -> io::Result<usize> {
        let inner = self.read();
        for record in inner.records.values() {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(inner.records.len())
    }

    pub fn export_string(&self) -> String {
        let mut buf = Vec::new();
        self.export(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    /// Every record, in export order.
    pub fn records(&self) -> Vec<StoreRecord> {
        self.read().records.values().cloned().collect()
    }

    /// Imports an export stream as one atomic batch. Blank lines are
    /// ignored; a malformed line aborts with its 1-based line number.
    pub fn import<R: Read>(&self, input: R) -> Result<PutOutcome, StoreError> {
        let mut batch = Vec::new();
        let mut line_numbers = Vec::new();
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line.map_err(|e| StoreError::Import {
                line: i + 1,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: StoreRecord = serde_json::from_str(&line).map_err(|e| StoreError::Import {
                line: i + 1,
                message: e.to_string(),
            })?;
            batch.push(record);
            line_numbers.push(i + 1);
        }
        self.put_batch(batch).map_err(|e| match e {
            StoreError::Validation { index, message, .. } => StoreError::Import {
                line: line_numbers[index],
                message,
            },
            other => other,
        })
    }
}

fn snapshot_of(record: &StoreRecord) -> HealthSnapshot {
    match record {
        StoreRecord::Snapshot(s) => s.clone(),
        _ => unreachable!("snapshot range holds only snapshots"),
    }
}

fn read_segment(path: &Path) -> Result<Vec<StoreRecord>, StoreError> {
    let mut file = OpenOptions::new().read(true).write(true).open(path).map_err(io_err(path))?;
    let mut text = String::new();
    file.read_to_string(&mut text).map_err(io_err(path))?;
    let complete = match text.rfind('\n') {
        Some(i) => i + 1,
        None => 0,
    };
    if complete < text.len() {
        tracing::warn!(path = %path.display(), bytes = text.len() - complete, "discarding torn final record");
        file.set_len(complete as u64).map_err(io_err(path))?;
        file.seek(SeekFrom::End(0)).map_err(io_err(path))?;
    }
    let mut out = Vec::new();
    for (i, line) in text[..complete].lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}
