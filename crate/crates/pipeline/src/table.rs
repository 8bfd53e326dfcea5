use std::fmt::Write;

use crossd_core::{Focus, HealthSnapshot};

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

/// Plain-text score table, one row per snapshot in project order.
pub fn score_table(snapshots: &[HealthSnapshot]) -> String {
    let mut rows: Vec<&HealthSnapshot> = snapshots.iter().collect();
    rows.sort_by(|a, b| a.project.cmp(&b.project));
    let width = rows.iter().map(|s| s.project.len()).chain([7]).max().unwrap_or(7);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>11}  {:<8}  {:>8}  {:>8}  {:>9}",
        "project", "criticality", "critical", "security", "activity", "relevance"
    );
    for s in rows {
        let score = |f: Focus| cell(s.category_scores.get(&f).copied());
        let _ = writeln!(
            out,
            "{:<width$}  {:>11}  {:<8}  {:>8}  {:>8}  {:>9}",
            s.project,
            cell(Some(s.criticality)),
            if s.is_critical { "yes" } else { "no" },
            score(Focus::Security),
            score(Focus::Activity),
            score(Focus::Relevance),
        );
    }
    out
}
