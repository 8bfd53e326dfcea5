use super::vulns::{time_to_fix, vulns_as_of};
use crate::domain::{DependencyReport, MetricObservation, MetricValue, RepoStats, VulnerabilityRecord};
use crate::time::Timestamp;

/// `source` of every observation derived by the engine from collected facts.
pub const ENGINE_SOURCE: &str = "metrics-engine";

/// One observation per quantitative metric whose input is available, all
/// stamped `as_of`. Absent inputs are omitted rather than zero-filled.
pub fn compute_quantitative(
    stats: &RepoStats,
    deps: &DependencyReport,
    vulns: &[VulnerabilityRecord],
    as_of: Timestamp,
) -> Vec<MetricObservation> {
    let vulns = vulns_as_of(vulns, as_of);
    let ttf = time_to_fix(&vulns, as_of);
    let high_open = vulns
        .iter()
        .filter(|v| v.fixed_at.is_none() && v.severity.is_high_or_critical())
        .count();

    let values: [(&str, Option<f64>); 16] = [
        ("contributors", Some(stats.contributors as f64)),
        ("commits_total", Some(stats.commits_total as f64)),
        ("commits_90d", Some(stats.commits_90d as f64)),
        ("lines_of_code", stats.lines_of_code.map(|v| v as f64)),
        ("forks", Some(stats.forks as f64)),
        ("stars", Some(stats.stars as f64)),
        ("pull_requests_90d", Some(stats.pull_requests_90d as f64)),
        ("mailing_list_posts_90d", stats.mailing_list_posts_90d.map(|v| v as f64)),
        ("downloads_90d", stats.downloads_90d.map(|v| v as f64)),
        ("direct_deps", Some(deps.direct_deps as f64)),
        ("transitive_deps", Some(deps.transitive_deps as f64)),
        ("transitive_dependents", Some(deps.transitive_dependents as f64)),
        ("vulnerable_deps", Some(deps.vulnerable_deps as f64)),
        ("open_vulns", Some(ttf.open_count as f64)),
        ("high_or_critical_vulns", Some(high_open as f64)),
        ("median_days_to_fix", ttf.median_days_to_fix),
    ];
    values
        .into_iter()
        .filter_map(|(id, v)| {
            v.map(|v| MetricObservation {
                metric_id: id.to_string(),
                project: stats.project.clone(),
                value: MetricValue::Number(v),
                observed_at: as_of,
                source: ENGINE_SOURCE.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{validate_observation, Severity};
    use crate::registry::MetricRegistry;
    use crate::time::parse_rfc3339;

    fn stats() -> RepoStats {
        RepoStats {
            project: "github:demo/alpha".into(),
            contributors: 2,
            commits_total: 3,
            commits_90d: 1,
            lines_of_code: None,
            forks: 0,
            stars: 1,
            open_pull_requests: 0,
            pull_requests_90d: 0,
            mailing_list_posts_90d: None,
            downloads_90d: None,
            last_commit_at: None,
            fetched_at: parse_rfc3339("2023-12-01T00:00:00Z").unwrap(),
        }
    }

    fn value(obs: &[MetricObservation], id: &str) -> Option<f64> {
        obs.iter().find(|o| o.metric_id == id).and_then(|o| o.value.as_f64())
    }

    #[test]
    fn passes_fields_and_omits_absent() {
        let as_of = parse_rfc3339("2024-01-01T00:00:00Z").unwrap();
        let obs = compute_quantitative(&stats(), &DependencyReport::empty("github:demo/alpha"), &[], as_of);
        assert_eq!(value(&obs, "contributors"), Some(2.0));
        assert_eq!(value(&obs, "lines_of_code"), None);
        assert_eq!(value(&obs, "downloads_90d"), None);
        assert_eq!(value(&obs, "median_days_to_fix"), None);
        assert_eq!(value(&obs, "open_vulns"), Some(0.0));
        assert!(obs.iter().all(|o| o.observed_at == as_of));
        let reg = MetricRegistry::bundled();
        assert!(obs.iter().all(|o| validate_observation(o, reg).is_ok()));
    }

    #[test]
    fn counts_high_vulns() {
        let as_of = parse_rfc3339("2024-01-01T00:00:00Z").unwrap();
        let v = VulnerabilityRecord {
            vuln_id: "OSV-1".into(),
            package: "github:demo/alpha".into(),
            affected_range: ">=0".into(),
            severity: Severity::High,
            severity_score: 7.5,
            published_at: parse_rfc3339("2023-06-01T00:00:00Z").unwrap(),
            fixed_at: None,
            fixed_version: None,
        };
        let obs = compute_quantitative(&stats(), &DependencyReport::empty("github:demo/alpha"), &[v], as_of);
        assert_eq!(value(&obs, "high_or_critical_vulns"), Some(1.0));
        assert_eq!(value(&obs, "open_vulns"), Some(1.0));
    }
}
