use crossd_core::time::{parse_rfc3339, Timestamp};
use crossd_core::{Platform, ProjectRef};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::cursor::{RepoMeta, Stage};
use crate::SchemaError;

/// Wire dialect of a code-host REST API.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dialect {
    /// `/repos/{owner}/{name}` style, used by GitHub and compatible hosts.
    Github,
    /// `/api/v4/projects/{owner}%2F{name}` style.
    Gitlab,
}

impl Dialect {
    /// Hosts without a dialect of their own are spoken to GitHub-style.
    pub fn for_platform(platform: Platform) -> Dialect {
        match platform {
            Platform::Gitlab => Dialect::Gitlab,
            Platform::Github | Platform::OtherHost => Dialect::Github,
        }
    }

    pub(crate) fn stage_url(self, base: &str, project: &ProjectRef, stage: Stage, per_page: u32) -> Option<String> {
        let base = base.trim_end_matches('/');
        let root = match self {
            Dialect::Github => format!("{base}/repos/{}/{}", project.owner(), project.name()),
            Dialect::Gitlab => format!("{base}/api/v4/projects/{}%2F{}", project.owner(), project.name()),
        };
        Some(match (self, stage) {
            (_, Stage::Done) => return None,
            (Dialect::Github, Stage::Repo) => root,
            (Dialect::Gitlab, Stage::Repo) => format!("{root}?license=true"),
            (Dialect::Github, Stage::Commits) => format!("{root}/commits?per_page={per_page}"),
            (Dialect::Gitlab, Stage::Commits) => format!("{root}/repository/commits?per_page={per_page}"),
            (Dialect::Github, Stage::Contributors) => format!("{root}/contributors?per_page={per_page}"),
            (Dialect::Gitlab, Stage::Contributors) => format!("{root}/repository/contributors?per_page={per_page}"),
            (Dialect::Github, Stage::Pulls) => format!("{root}/pulls?state=all&per_page={per_page}"),
            (Dialect::Gitlab, Stage::Pulls) => format!("{root}/merge_requests?state=all&per_page={per_page}"),
        })
    }

    pub(crate) fn parse_repo(self, body: &Value) -> Result<RepoMeta, SchemaError> {
        if !body.is_object() {
            return Err(SchemaError::new("", "repository response is not an object"));
        }
        let text = |key: &str| {
            body.get(key)
                .and_then(Value::as_str)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
        };
        let count = |key: &str| body.get(key).and_then(Value::as_u64).unwrap_or(0);
        let topics = |key: &str| -> Vec<String> {
            body.get(key)
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
                .unwrap_or_default()
        };
        let created_at = text("created_at")
            .map(|t| parse_rfc3339(&t).map_err(|e| SchemaError::new("created_at", e.to_string())))
            .transpose()?;
        let license_field = |key: &str| {
            body.get("license")
                .and_then(|l| l.get(key))
                .and_then(Value::as_str)
                .filter(|s| !s.is_empty() && *s != "NOASSERTION" && *s != "other")
                .map(str::to_string)
        };
        Ok(match self {
            Dialect::Github => RepoMeta {
                description: text("description"),
                primary_language: text("language"),
                license: license_field("spdx_id"),
                homepage: text("homepage").filter(|h| h.contains("://")),
                created_at,
                topics: topics("topics"),
                forks: count("forks_count"),
                stars: count("stargazers_count"),
            },
            Dialect::Gitlab => RepoMeta {
                description: text("description"),
                primary_language: None,
                license: license_field("nickname").or_else(|| license_field("key")),
                homepage: None,
                created_at,
                topics: {
                    let t = topics("topics");
                    if t.is_empty() {
                        topics("tag_list")
                    } else {
                        t
                    }
                },
                forks: count("forks_count"),
                stars: count("star_count"),
            },
        })
    }

    pub(crate) fn commit_date(self, item: &Value) -> Option<Timestamp> {
        let raw = match self {
            Dialect::Github => item
                .pointer("/commit/committer/date")
                .or_else(|| item.pointer("/commit/author/date")),
            Dialect::Gitlab => item.get("committed_date").or_else(|| item.get("created_at")),
        };
        raw.and_then(Value::as_str).and_then(|s| parse_rfc3339(s).ok())
    }

    pub(crate) fn pull_is_open(self, item: &Value) -> bool {
        let state = item.get("state").and_then(Value::as_str);
        match self {
            Dialect::Github => state == Some("open"),
            Dialect::Gitlab => state == Some("opened"),
        }
    }

    pub(crate) fn pull_created(self, item: &Value) -> Option<Timestamp> {
        item.get("created_at").and_then(Value::as_str).and_then(|s| parse_rfc3339(s).ok())
    }
}

/// Extracts the `rel="next"` target from an RFC 8288 `Link` header.
pub(crate) fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let mut pieces = part.split(';');
        let target = pieces.next()?.trim().strip_prefix('<')?.strip_suffix('>')?;
        let is_next = pieces.any(|p| {
            let p = p.trim();
            p.strip_prefix("rel=")
                .map(|v| v.trim_matches('"').split_whitespace().any(|r| r.eq_ignore_ascii_case("next")))
                .unwrap_or(false)
        });
        is_next.then(|| target.to_string())
    })
}
