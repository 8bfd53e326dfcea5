use std::collections::BTreeMap;
use std::fs;

use chrono::{Duration, TimeZone, Utc};
use crossd_core::time::Timestamp;
use crossd_core::{
    Alert, DeliveryState, Delivery, Focus, HealthSnapshot, MetricObservation, MetricValue, Platform, ProjectRecord,
    ProjectRef, RuleId, WatchlistSubscription,
};
use crossd_store::{
    DeliveryUpdate, HealthStore, PageRequest, ProjectFilter, ProjectSort, PutOutcome, StoreError, StoreRecord,
};
use proptest::prelude::*;

fn day(n: i64) -> Timestamp {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap() + Duration::days(n)
}

fn obs(project: &str, metric: &str, at: Timestamp, value: f64, source: &str) -> MetricObservation {
    MetricObservation {
        metric_id: metric.into(),
        project: project.into(),
        value: MetricValue::Number(value),
        observed_at: at,
        source: source.into(),
    }
}

fn snap(project: &str, at: Timestamp, criticality: f64, digest: &str) -> HealthSnapshot {
    HealthSnapshot {
        project: project.into(),
        computed_at: at,
        category_scores: BTreeMap::from([(Focus::Security, 0.5), (Focus::Activity, criticality)]),
        criticality,
        is_critical: criticality >= 0.8,
        input_digest: digest.into(),
    }
}

fn record(id: &str, language: &str, license: Option<&str>, description: &str) -> ProjectRecord {
    ProjectRecord {
        project: ProjectRef::parse(id).unwrap(),
        description: Some(description.into()),
        primary_language: Some(language.into()),
        license: license.map(str::to_string),
        homepage: None,
        created_at: day(-1000),
        fetched_at: day(0),
        topics: vec![],
    }
}

const A: &str = "github:demo/alpha";
const B: &str = "github:demo/beta";

#[test]
fn put_observations_is_idempotent() {
    let store = HealthStore::in_memory();
    let batch = vec![
        obs(A, "commits_90d", day(1), 1.0, "s"),
        obs(A, "commits_90d", day(2), 2.0, "s"),
        obs(A, "stars", day(1), 3.0, "s"),
    ];
    assert_eq!(
        store.put_observations(batch.clone()).unwrap(),
        PutOutcome { inserted: 3, deduplicated: 0 }
    );
    assert_eq!(
        store.put_observations(batch).unwrap(),
        PutOutcome { inserted: 0, deduplicated: 3 }
    );
}

#[test]
fn invalid_batch_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let store = HealthStore::open(dir.path()).unwrap();
    let mut bad = obs(A, "commits_90d", day(2), 1.0, "s");
    bad.metric_id = "no_such_metric".into();
    let err = store
        .put_observations(vec![obs(A, "commits_90d", day(1), 1.0, "s"), bad])
        .unwrap_err();
    assert!(matches!(err, StoreError::Validation { index: 1, .. }));
    assert!(store.is_empty());
    drop(store);
    assert!(HealthStore::open(dir.path()).unwrap().is_empty());
}

#[test]
fn same_key_different_value_conflicts() {
    let store = HealthStore::in_memory();
    store.put_observations(vec![obs(A, "stars", day(1), 1.0, "s")]).unwrap();
    let err = store.put_observations(vec![obs(A, "stars", day(1), 2.0, "s")]).unwrap_err();
    assert!(matches!(err, StoreError::Conflict { .. }));
}

#[test]
fn latest_snapshot_rules() {
    let store = HealthStore::in_memory();
    assert!(store.get_latest_snapshot(A).is_none());
    store.put_snapshot(snap(A, day(1), 0.2, "aa")).unwrap();
    store.put_snapshot(snap(A, day(2), 0.3, "00")).unwrap();
    assert_eq!(store.get_latest_snapshot(A).unwrap().computed_at, day(2));

    store.put_snapshot(snap(A, day(3), 0.4, "ab")).unwrap();
    store.put_snapshot(snap(A, day(3), 0.5, "ff")).unwrap();
    store.put_snapshot(snap(A, day(3), 0.6, "0c")).unwrap();
    assert_eq!(store.get_latest_snapshot(A).unwrap().input_digest, "ff");
    assert_eq!(store.latest_snapshot_before(A, day(3)).unwrap().computed_at, day(2));
    assert!(store.latest_snapshot_before(A, day(1)).is_none());
    assert_eq!(store.snapshots(A).len(), 5);
}

#[test]
fn history_is_half_open() {
    let store = HealthStore::in_memory();
    store
        .put_observations(vec![
            obs(A, "stars", day(9), 9.0, "s"),
            obs(A, "stars", day(1), 1.0, "s"),
            obs(A, "stars", day(5), 5.0, "s"),
            obs(A, "stars", day(5), 5.0, "a"),
            obs(A, "forks", day(2), 2.0, "s"),
        ])
        .unwrap();
    let got: Vec<(Timestamp, String)> = store
        .query_history(A, "stars", day(0), day(6))
        .unwrap()
        .into_iter()
        .map(|o| (o.observed_at, o.source))
        .collect();
    assert_eq!(got, [(day(1), "s".into()), (day(5), "a".into()), (day(5), "s".into())]);
    assert!(store.query_history(A, "stars", day(5), day(5)).unwrap().is_empty());
    assert!(store.query_history("github:demo/none", "stars", day(0), day(99)).unwrap().is_empty());
    assert!(matches!(
        store.query_history(A, "stars", day(6), day(0)),
        Err(StoreError::InvalidRange)
    ));
}

#[test]
fn reopen_sees_identical_state() {
    let dir = tempfile::tempdir().unwrap();
    let before = {
        let store = HealthStore::open(dir.path()).unwrap();
        store.put_batch(vec![StoreRecord::Project(record(A, "Rust", Some("MIT"), "parser"))]).unwrap();
        store.put_observations(vec![obs(A, "stars", day(1), 1.0, "s")]).unwrap();
        store.put_snapshot(snap(A, day(1), 0.25, "d1")).unwrap();
        store.export_string()
    };
    let store = HealthStore::open(dir.path()).unwrap();
    assert_eq!(store.export_string(), before);
    assert_eq!(store.get_latest_snapshot(A).unwrap().criticality, 0.25);
    assert_eq!(store.query_history(A, "stars", day(0), day(2)).unwrap().len(), 1);
}

#[test]
fn torn_tail_is_discarded() {
    let dir = tempfile::tempdir().unwrap();
    {
        let store = HealthStore::open(dir.path()).unwrap();
        store.put_observations(vec![obs(A, "stars", day(1), 1.0, "s")]).unwrap();
    }
    let segment = dir.path().join("github__demo__alpha.ndjson");
    let mut text = fs::read_to_string(&segment).unwrap();
    text.push_str(r#"{"kind":"observation","record":{"metric_"#);
    fs::write(&segment, text).unwrap();

    let store = HealthStore::open(dir.path()).unwrap();
    assert_eq!(store.len(), 1);
    store.put_observations(vec![obs(A, "stars", day(2), 2.0, "s")]).unwrap();
    drop(store);
    assert_eq!(HealthStore::open(dir.path()).unwrap().len(), 2);
}

#[test]
fn corrupt_line_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.ndjson"), "{\"kind\":\"nope\"}\n").unwrap();
    match HealthStore::open(dir.path()) {
        Err(StoreError::Corrupt { line: 1, .. }) => {}
        other => panic!("unexpected {:?}", other.map(|s| s.len())),
    }
}

fn two_project_store() -> HealthStore {
    let store = HealthStore::in_memory();
    store
        .put_batch(vec![
            StoreRecord::Project(record(A, "Rust", Some("MIT"), "Small parsing library")),
            StoreRecord::Project(record(B, "Go", Some("Apache-2.0"), "HTTP router")),
        ])
        .unwrap();
    store
}

#[test]
fn list_filters() {
    let store = two_project_store();
    let page = |f: ProjectFilter| {
        store
            .list_projects(&f, ProjectSort::CriticalityDesc, PageRequest { offset: 0, limit: 50 })
            .unwrap()
    };
    let rust = page(ProjectFilter {
        language: Some("rust".into()),
        ..Default::default()
    });
    assert_eq!(rust.total, 1);
    assert_eq!(rust.items[0].record.canonical_id(), A);

    assert_eq!(page(ProjectFilter { critical_only: true, ..Default::default() }).total, 0);
    assert_eq!(
        page(ProjectFilter {
            text: Some("ROUTER".into()),
            ..Default::default()
        })
        .total,
        1
    );
    assert_eq!(
        page(ProjectFilter {
            text: Some("alph".into()),
            license: Some("mit".into()),
            ..Default::default()
        })
        .total,
        1
    );

    store.put_snapshot(snap(B, day(1), 0.9, "d")).unwrap();
    store.put_snapshot(snap(A, day(1), 0.1, "d")).unwrap();
    assert_eq!(page(ProjectFilter { critical_only: true, ..Default::default() }).total, 1);
    assert_eq!(
        page(ProjectFilter {
            min_criticality: Some(0.05),
            ..Default::default()
        })
        .total,
        2
    );
    let all = page(ProjectFilter::default());
    assert_eq!(all.items[0].record.canonical_id(), B);
}

#[test]
fn pagination_bounds() {
    let store = two_project_store();
    let f = ProjectFilter::default();
    let beyond = store
        .list_projects(&f, ProjectSort::NameAsc, PageRequest { offset: 10, limit: 5 })
        .unwrap();
    assert_eq!(beyond.total, 2);
    assert!(beyond.items.is_empty());
    assert!(matches!(
        store.list_projects(&f, ProjectSort::NameAsc, PageRequest { offset: 0, limit: 501 }),
        Err(StoreError::LimitTooLarge(501))
    ));
    let names: Vec<String> = store
        .list_projects(&f, ProjectSort::NameAsc, PageRequest { offset: 0, limit: 500 })
        .unwrap()
        .items
        .iter()
        .map(|s| s.record.project.name().to_string())
        .collect();
    assert_eq!(names, ["alpha", "beta"]);
}

#[test]
fn ecosystem_summary_bins() {
    let store = HealthStore::in_memory();
    let empty = store.ecosystem_summary();
    assert_eq!(empty.project_count, 0);
    assert!(empty.criticality_histogram.is_empty());

    store.put_snapshot(snap(A, day(1), 0.9, "x")).unwrap();
    store.put_snapshot(snap(A, day(2), 0.05, "x")).unwrap();
    store.put_snapshot(snap(B, day(1), 0.95, "x")).unwrap();
    let s = store.ecosystem_summary();
    assert_eq!(s.project_count, 2);
    assert_eq!(s.critical_count, 1);
    assert_eq!(s.criticality_histogram, [1, 0, 0, 0, 0, 0, 0, 0, 0, 1]);
    assert_eq!(s.category_means[&Focus::Security], 0.5);
    assert_eq!(s.category_means[&Focus::Activity], 0.5);
}

#[test]
fn watchlist_lifecycle() {
    let store = HealthStore::in_memory();
    let w = WatchlistSubscription {
        id: "w1".into(),
        subscriber: "ops".into(),
        projects: [A.to_string()].into(),
        rules: [RuleId::BecameCritical].into(),
        delivery: Delivery::LogSink,
    };
    store.put_watchlist(w.clone()).unwrap();
    assert_eq!(store.watchlist("w1"), Some(w));
    assert!(store.delete_watchlist("w1").unwrap());
    assert!(store.watchlist("w1").is_none());
    assert!(!store.delete_watchlist("w1").unwrap());
    assert!(store.watchlists().is_empty());
}

#[test]
fn alert_state_follows_latest_delivery() {
    let store = HealthStore::in_memory();
    store
        .put_batch(vec![StoreRecord::Alert(Alert {
            id: "al1".into(),
            subscription_id: "w1".into(),
            project: A.into(),
            rule: RuleId::NewHighVuln,
            triggered_at: day(1),
            payload: serde_json::json!({"vuln_id": "X"}),
            delivery_state: DeliveryState::Pending,
        })])
        .unwrap();
    store
        .put_batch(vec![StoreRecord::AlertDelivery(DeliveryUpdate {
            alert_id: "al1".into(),
            state: DeliveryState::Delivered,
            attempts: 2,
            at: day(2),
            error: None,
        })])
        .unwrap();
    assert_eq!(store.alerts()[0].delivery_state, DeliveryState::Delivered);
    assert!(store.alert_ids().contains("al1"));
}

#[test]
fn export_import_round_trip() {
    let store = two_project_store();
    store.put_observations(vec![obs(A, "stars", day(1), 0.1 + 0.2, "s")]).unwrap();
    store.put_snapshot(snap(A, day(1), 1.0 / 3.0, "d")).unwrap();
    let first = store.export_string();

    let copy = HealthStore::in_memory();
    let outcome = copy.import(first.as_bytes()).unwrap();
    assert_eq!(outcome.inserted, store.len());
    assert_eq!(copy.export_string(), first);
    assert_eq!(copy.import(first.as_bytes()).unwrap().inserted, 0);
}

#[test]
fn import_reports_line_numbers() {
    let store = HealthStore::in_memory();
    let good = serde_json::to_string(&StoreRecord::Observation(obs(A, "stars", day(1), 1.0, "s"))).unwrap();
    let text = format!("{good}\n\nnot json\n");
    assert!(matches!(store.import(text.as_bytes()), Err(StoreError::Import { line: 3, .. })));
    assert!(store.is_empty());

    let mut bad = obs(A, "stars", day(1), 1.0, "s");
    bad.value = MetricValue::Ordinal(2);
    let text = format!("{good}\n{}\n", serde_json::to_string(&StoreRecord::Observation(bad)).unwrap());
    assert!(matches!(store.import(text.as_bytes()), Err(StoreError::Import { line: 2, .. })));
}

#[test]
fn empty_export() {
    assert_eq!(HealthStore::in_memory().export_string(), "");
}

#[test]
fn concurrent_readers_see_whole_batches() {
    let store = std::sync::Arc::new(HealthStore::in_memory());
    let writer = {
        let store = store.clone();
        std::thread::spawn(move || {
            for i in 0..200 {
                let batch = (0..5).map(|j| obs(A, "stars", day(i), j as f64, &format!("s{j}"))).collect();
                store.put_observations(batch).unwrap();
            }
        })
    };
    for _ in 0..200 {
        let n = store.query_history(A, "stars", day(0), day(1000)).unwrap().len();
        assert_eq!(n % 5, 0);
    }
    writer.join().unwrap();
}

const PROJECTS: [&str; 3] = [A, B, "gitlab:demo/gamma"];
const METRICS: [&str; 3] = ["stars", "forks", "commits_90d"];

fn arb_obs() -> impl Strategy<Value = MetricObservation> {
    (0usize..3, 0usize..3, 0i64..400, 0u32..1000, 0usize..3).prop_map(|(p, m, d, v, s)| {
        obs(PROJECTS[p], METRICS[m], day(d), f64::from(v), ["collector", "engine", "x"][s])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn query_equals_filtered_export(
        batch in proptest::collection::vec(arb_obs(), 0..2000),
        p in 0usize..3, m in 0usize..3, a in 0i64..400, b in 0i64..400,
    ) {
        let store = HealthStore::in_memory();
        // identical keys may carry different values in random data; keep the first
        let mut seen = std::collections::HashSet::new();
        let batch: Vec<_> = batch
            .into_iter()
            .filter(|o| seen.insert((o.project.clone(), o.metric_id.clone(), o.observed_at, o.source.clone())))
            .collect();
        store.put_observations(batch).unwrap();
        let (from, to) = (day(a.min(b)), day(a.max(b)));
        let got = store.query_history(PROJECTS[p], METRICS[m], from, to).unwrap();

        let mut expected: Vec<MetricObservation> = store
            .export_string()
            .lines()
            .filter_map(|l| match serde_json::from_str::<StoreRecord>(l).unwrap() {
                StoreRecord::Observation(o) => Some(o),
                _ => None,
            })
            .filter(|o| o.project == PROJECTS[p] && o.metric_id == METRICS[m] && o.observed_at >= from && o.observed_at < to)
            .collect();
        expected.sort_by(|x, y| x.observed_at.cmp(&y.observed_at).then_with(|| x.source.cmp(&y.source)));
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn append_only(batches in proptest::collection::vec(proptest::collection::vec(arb_obs(), 0..40), 1..8)) {
        let store = HealthStore::in_memory();
        let mut previous: Vec<String> = Vec::new();
        for batch in batches {
            // rejected batches (conflicts) must not disturb earlier records either
            let _ = store.put_observations(batch);
            let now: std::collections::HashSet<String> = store.export_string().lines().map(str::to_string).collect();
            for line in &previous {
                prop_assert!(now.contains(line));
            }
            previous = now.into_iter().collect();
        }
    }
}

#[test]
fn platform_segments_are_separate_files() {
    let dir = tempfile::tempdir().unwrap();
    let store = HealthStore::open(dir.path()).unwrap();
    let g = ProjectRef::parse("gitlab:demo/gamma").unwrap();
    assert_eq!(g.platform(), Platform::Gitlab);
    store
        .put_observations(vec![obs(A, "stars", day(1), 1.0, "s"), obs(g.canonical_id(), "stars", day(1), 1.0, "s")])
        .unwrap();
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["github__demo__alpha.ndjson", "gitlab__demo__gamma.ndjson"]);
}

#[test]
fn open_history_bounds() {
    let store = HealthStore::in_memory();
    store.put_observations(vec![obs(A, "stars", day(3), 5.0, "test")]).unwrap();
    let all = store
        .query_history(A, "stars", chrono::DateTime::<Utc>::MIN_UTC, chrono::DateTime::<Utc>::MAX_UTC)
        .unwrap();
    assert_eq!(all.len(), 1);
    assert!(store.latest_snapshot_before(A, chrono::DateTime::<Utc>::MAX_UTC).is_none());
    let far = obs(A, "stars", chrono::DateTime::<Utc>::MAX_UTC, 1.0, "test");
    assert!(matches!(store.put_observations(vec![far]), Err(StoreError::Validation { .. })));
}
