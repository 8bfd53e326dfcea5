use crate::domain::{TimeToFixStats, VulnerabilityRecord};
use crate::time::{days_between, Timestamp};

/// The vulnerability set as it stood at `as_of`: records published later are
/// dropped and fixes that land after `as_of` are not yet visible.
pub fn vulns_as_of(vulns: &[VulnerabilityRecord], as_of: Timestamp) -> Vec<VulnerabilityRecord> {
    vulns
        .iter()
        .filter(|v| v.published_at <= as_of)
        .map(|v| {
            let mut v = v.clone();
            if v.fixed_at.is_some_and(|f| f > as_of) {
                v.fixed_at = None;
                v.fixed_version = None;
            }
            v
        })
        .collect()
}

/// Fix-latency statistics. Unfixed records are censored: they only count
/// towards `open_count` and the oldest open age.
pub fn time_to_fix(vulns: &[VulnerabilityRecord], as_of: Timestamp) -> TimeToFixStats {
    let mut fix_days: Vec<f64> = Vec::new();
    let mut open_ages: Vec<f64> = Vec::new();
    for v in vulns {
        match v.fixed_at {
            Some(fixed) => fix_days.push(days_between(v.published_at, fixed)),
            None => open_ages.push(days_between(v.published_at, as_of)),
        }
    }
    fix_days.sort_by(f64::total_cmp);
    let median = match fix_days.len() {
        0 => None,
        n if n % 2 == 1 => Some(fix_days[n / 2]),
        n => Some((fix_days[n / 2 - 1] + fix_days[n / 2]) / 2.0),
    };
    TimeToFixStats {
        fixed_count: fix_days.len() as u64,
        open_count: open_ages.len() as u64,
        median_days_to_fix: median,
        max_open_age_days: open_ages.into_iter().reduce(f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Severity;
    use crate::time::parse_rfc3339;

    fn ts(s: &str) -> Timestamp {
        parse_rfc3339(s).unwrap()
    }

    fn vuln(published: &str, fixed: Option<&str>) -> VulnerabilityRecord {
        VulnerabilityRecord {
            vuln_id: format!("OSV-{published}"),
            package: "p".into(),
            affected_range: ">=0".into(),
            severity: Severity::Medium,
            severity_score: 5.5,
            published_at: ts(published),
            fixed_at: fixed.map(ts),
            fixed_version: None,
        }
    }

    #[test]
    fn single_fixed() {
        let s = time_to_fix(&[vuln("2023-01-01T00:00:00Z", Some("2023-01-11T00:00:00Z"))], ts("2023-02-01T00:00:00Z"));
        assert_eq!(s.fixed_count, 1);
        assert_eq!(s.median_days_to_fix, Some(10.0));
        assert_eq!(s.open_count, 0);
        assert_eq!(s.max_open_age_days, None);
    }

    #[test]
    fn empty() {
        let s = time_to_fix(&[], ts("2023-02-01T00:00:00Z"));
        assert_eq!(
            s,
            TimeToFixStats {
                fixed_count: 0,
                open_count: 0,
                median_days_to_fix: None,
                max_open_age_days: None
            }
        );
    }

    #[test]
    fn censored_open() {
        let s = time_to_fix(&[vuln("2023-01-01T00:00:00Z", None)], ts("2023-01-31T00:00:00Z"));
        assert_eq!(s.open_count, 1);
        assert_eq!(s.max_open_age_days, Some(30.0));
        assert_eq!(s.median_days_to_fix, None);
    }

    #[test]
    fn even_count_median_is_mean_of_middle() {
        let v = [
            vuln("2023-01-01T00:00:00Z", Some("2023-01-02T00:00:00Z")),
            vuln("2023-01-01T00:00:00Z", Some("2023-01-05T00:00:00Z")),
            vuln("2023-01-01T00:00:00Z", Some("2023-01-11T00:00:00Z")),
            vuln("2023-01-01T00:00:00Z", Some("2023-03-01T00:00:00Z")),
        ];
        assert_eq!(time_to_fix(&v, ts("2024-01-01T00:00:00Z")).median_days_to_fix, Some(7.0));
    }

    #[test]
    fn as_of_hides_future_facts() {
        let v = [
            vuln("2023-01-01T00:00:00Z", Some("2023-06-01T00:00:00Z")),
            vuln("2023-09-01T00:00:00Z", None),
        ];
        let seen = vulns_as_of(&v, ts("2023-03-01T00:00:00Z"));
        assert_eq!(seen.len(), 1);
        assert_eq!(seen[0].fixed_at, None);
    }
}
