use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use crossd_core::time::Timestamp;
use serde::{Deserialize, Serialize};

use super::CollectError;

/// Opaque resumption token returned when a collection stops early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectorCursor(String);

impl CollectorCursor {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn from_token(token: impl Into<String>) -> Self {
        CollectorCursor(token.into())
    }

    pub(crate) fn encode(state: &CursorState) -> Self {
        let json = serde_json::to_vec(state).expect("cursor state serializes");
        CollectorCursor(URL_SAFE_NO_PAD.encode(json))
    }

    pub(crate) fn decode(&self) -> Result<CursorState, CollectError> {
        let bytes = URL_SAFE_NO_PAD
            .decode(self.0.trim())
            .map_err(|e| CollectError::BadCursor(e.to_string()))?;
        serde_json::from_slice(&bytes).map_err(|e| CollectError::BadCursor(e.to_string()))
    }
}

impl std::fmt::Display for CollectorCursor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub(crate) enum Stage {
    Repo,
    Commits,
    Contributors,
    Pulls,
    Done,
}

impl Stage {
    pub(crate) fn next(self) -> Stage {
        match self {
            Stage::Repo => Stage::Commits,
            Stage::Commits => Stage::Contributors,
            Stage::Contributors => Stage::Pulls,
            Stage::Pulls | Stage::Done => Stage::Done,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub(crate) struct RepoMeta {
    pub description: Option<String>,
    pub primary_language: Option<String>,
    pub license: Option<String>,
    pub homepage: Option<String>,
    pub created_at: Option<Timestamp>,
    pub topics: Vec<String>,
    pub forks: u64,
    pub stars: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct CursorState {
    pub project: String,
    pub as_of: Timestamp,
    pub stage: Stage,
    pub next_url: Option<String>,
    pub repo: Option<RepoMeta>,
    pub commits_total: u64,
    pub commits_90d: u64,
    pub last_commit_at: Option<Timestamp>,
    pub contributors: u64,
    pub open_pull_requests: u64,
    pub pull_requests_90d: u64,
}

impl CursorState {
    pub(crate) fn new(project: &str, as_of: Timestamp) -> Self {
        CursorState {
            project: project.to_string(),
            as_of,
            stage: Stage::Repo,
            next_url: None,
            repo: None,
            commits_total: 0,
            commits_90d: 0,
            last_commit_at: None,
            contributors: 0,
            open_pull_requests: 0,
            pull_requests_90d: 0,
        }
    }

    pub(crate) fn advance(&mut self) {
        self.stage = self.stage.next();
        self.next_url = None;
    }
}
