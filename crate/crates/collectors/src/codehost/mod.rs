//! Paginating, rate-limit aware client for code-host REST APIs.

mod cursor;
mod dialect;
mod limiter;

use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use chrono::Utc;
use crossd_core::time::Timestamp;
use crossd_core::{Platform, ProjectRecord, ProjectRef, RepoStats};
use reqwest::header::{HeaderMap, ACCEPT, AUTHORIZATION, LINK, RETRY_AFTER, USER_AGENT};
use reqwest::StatusCode;
use serde_json::Value;
use thiserror::Error;

pub use cursor::CollectorCursor;
pub use dialect::Dialect;
pub use limiter::HostLimiter;

use crate::SchemaError;
use cursor::{CursorState, Stage};
use dialect::next_link;

#[derive(Debug, Error)]
pub enum CollectError {
    /// The host asked us to wait longer than we are willing to.
    #[error("rate limited by host; retry after {}s", retry_after.as_secs())]
    RateLimited {
        retry_after: Duration,
        cursor: Option<CollectorCursor>,
    },
    #[error("authentication rejected ({status}): {message}")]
    Auth { status: u16, message: String },
    #[error("not found: {url}")]
    NotFound { url: String },
    #[error("host error after {attempts} attempt(s): {message}")]
    Host {
        status: Option<u16>,
        attempts: u32,
        message: String,
    },
    #[error("page budget exhausted; resume with the cursor")]
    BudgetExhausted { cursor: CollectorCursor },
    #[error("invalid cursor: {0}")]
    BadCursor(String),
    #[error("unexpected response shape: {0}")]
    Schema(#[from] SchemaError),
}

/// Capped exponential backoff for transient failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub base: Duration,
    pub max: Duration,
    pub attempts: u32,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff {
            base: Duration::from_millis(500),
            max: Duration::from_secs(30),
            attempts: 5,
        }
    }
}

impl Backoff {
    /// Delay before retry number `retry` (0-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 2u32.saturating_pow(retry);
        self.base.saturating_mul(factor).min(self.max)
    }
}

#[derive(Debug, Clone)]
pub struct HostEndpoint {
    pub base_url: String,
    pub dialect: Dialect,
    pub token: Option<String>,
}

impl HostEndpoint {
    pub fn new(base_url: impl Into<String>, dialect: Dialect) -> Self {
        HostEndpoint {
            base_url: base_url.into(),
            dialect,
            token: None,
        }
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token;
        self
    }

    /// Public API root for a platform. Other hosts have no default.
    pub fn default_for(platform: Platform) -> Option<Self> {
        match platform {
            Platform::Github => Some(Self::new("https://api.github.com", Dialect::Github)),
            Platform::Gitlab => Some(Self::new("https://gitlab.com", Dialect::Gitlab)),
            Platform::OtherHost => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CollectOptions {
    pub per_page: u32,
    /// Requests allowed in one `collect` call before it stops with a cursor.
    pub max_pages: u32,
    /// Longest rate-limit pause we sit out instead of failing.
    pub max_rate_limit_wait: Duration,
    pub backoff: Backoff,
    pub window_days: i64,
    /// Collection instant; defaults to the wall clock.
    pub as_of: Option<Timestamp>,
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions {
            per_page: 100,
            max_pages: 1000,
            max_rate_limit_wait: Duration::from_secs(60),
            backoff: Backoff::default(),
            window_days: 90,
            as_of: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeHostResult {
    pub record: ProjectRecord,
    pub stats: RepoStats,
}

struct Page {
    body: Value,
    next: Option<String>,
}

enum Failure {
    Fatal(CollectError),
    Retry(Option<u16>, String),
    Wait(Duration),
}

pub struct CodeHostCollector {
    client: reqwest::Client,
    endpoint: HostEndpoint,
    options: CollectOptions,
    limiter: HostLimiter,
}

impl CodeHostCollector {
    pub fn new(endpoint: HostEndpoint, options: CollectOptions) -> Self {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .expect("http client");
        CodeHostCollector {
            client,
            endpoint,
            options,
            limiter: HostLimiter::unlimited(),
        }
    }

    pub fn with_limiter(mut self, limiter: HostLimiter) -> Self {
        self.limiter = limiter;
        self
    }

    /// Collects metadata and activity counts for `project`, resuming from
    /// `cursor` when given. Stops with [`CollectError::BudgetExhausted`] once
    /// `max_pages` requests have been made without finishing.
    pub async fn collect(
        &self,
        project: &ProjectRef,
        cursor: Option<&CollectorCursor>,
    ) -> Result<CodeHostResult, CollectError> {
        let id = project.canonical_id();
        let mut st = match cursor {
            Some(c) => {
                let st = c.decode()?;
                if st.project != id {
                    return Err(CollectError::BadCursor(format!("cursor is for `{}`, not `{id}`", st.project)));
                }
                st
            }
            None => CursorState::new(id, self.options.as_of.unwrap_or_else(Utc::now)),
        };
        let dialect = self.endpoint.dialect;
        let window_start = st.as_of - chrono::Duration::days(self.options.window_days);
        let per_page = self.options.per_page.max(1);
        let mut used = 0u32;

        while st.stage != Stage::Done {
            let url = match &st.next_url {
                Some(u) => u.clone(),
                None => match dialect.stage_url(&self.endpoint.base_url, project, st.stage, per_page) {
                    Some(u) => u,
                    None => break,
                },
            };
            if used >= self.options.max_pages {
                return Err(CollectError::BudgetExhausted {
                    cursor: CollectorCursor::encode(&st),
                });
            }
            used += 1;
            let page = match self.fetch(&url).await {
                Ok(p) => p,
                Err(CollectError::RateLimited { retry_after, .. }) => {
                    return Err(CollectError::RateLimited {
                        retry_after,
                        cursor: Some(CollectorCursor::encode(&st)),
                    })
                }
                Err(e) => return Err(e),
            };

            if st.stage == Stage::Repo {
                st.repo = Some(dialect.parse_repo(&page.body)?);
                st.advance();
                continue;
            }
            let items = page
                .body
                .as_array()
                .ok_or_else(|| SchemaError::new("", format!("expected a JSON array from {url}")))?;
            match st.stage {
                Stage::Commits => {
                    for item in items {
                        st.commits_total += 1;
                        if let Some(date) = dialect.commit_date(item) {
                            if date > window_start && date <= st.as_of {
                                st.commits_90d += 1;
                            }
                            if date <= st.as_of {
                                st.last_commit_at = Some(st.last_commit_at.map_or(date, |d| d.max(date)));
                            }
                        }
                    }
                }
                Stage::Contributors => st.contributors += items.len() as u64,
                Stage::Pulls => {
                    for item in items {
                        if dialect.pull_is_open(item) {
                            st.open_pull_requests += 1;
                        }
                        if dialect
                            .pull_created(item)
                            .is_some_and(|c| c > window_start && c <= st.as_of)
                        {
                            st.pull_requests_90d += 1;
                        }
                    }
                }
                Stage::Repo | Stage::Done => unreachable!(),
            }
            match page.next {
                Some(next) => st.next_url = Some(next),
                None => st.advance(),
            }
        }

        Ok(finish(project, st))
    }

    async fn fetch(&self, url: &str) -> Result<Page, CollectError> {
        let backoff = self.options.backoff;
        let attempts = backoff.attempts.max(1);
        let mut transient = 0u32;
        let mut throttled = 0u32;
        loop {
            self.limiter.acquire().await;
            match self.fetch_once(url).await {
                Ok(page) => return Ok(page),
                Err(Failure::Retry(status, message)) => {
                    transient += 1;
                    if transient >= attempts {
                        return Err(CollectError::Host {
                            status,
                            attempts: transient,
                            message,
                        });
                    }
                    let delay = backoff.delay(transient - 1);
                    tracing::debug!(url, ?status, ?delay, "transient failure; backing off");
                    tokio::time::sleep(delay).await;
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Wait(wait)) => {
                    throttled += 1;
                    if wait > self.options.max_rate_limit_wait || throttled > attempts {
                        return Err(CollectError::RateLimited {
                            retry_after: wait,
                            cursor: None,
                        });
                    }
                    tracing::info!(url, wait_secs = wait.as_secs_f64(), "rate limited; pausing host");
                    self.limiter.block_until(Instant::now() + wait);
                }
            }
        }
    }

    async fn fetch_once(&self, url: &str) -> Result<Page, Failure> {
        let mut req = self
            .client
            .get(url)
            .header(ACCEPT, "application/json")
            .header(USER_AGENT, concat!("crossd/", env!("CARGO_PKG_VERSION")));
        if let Some(token) = &self.endpoint.token {
            req = match self.endpoint.dialect {
                Dialect::Github => req.header(AUTHORIZATION, format!("Bearer {token}")),
                Dialect::Gitlab => req.header("PRIVATE-TOKEN", token.as_str()),
            };
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) => return Err(Failure::Retry(None, e.to_string())),
        };
        let status = resp.status();
        let headers = resp.headers().clone();
        if status.is_success() {
            let next = headers.get(LINK).and_then(|h| h.to_str().ok()).and_then(next_link);
            let body = resp.json::<Value>().await.map_err(|e| {
                Failure::Fatal(CollectError::Schema(SchemaError::new("", format!("invalid JSON from {url}: {e}"))))
            })?;
            return Ok(Page { body, next });
        }
        let text = resp.text().await.unwrap_or_default();
        let message = short(&text);
        let limited = rate_limit_wait(&headers);
        match status {
            StatusCode::TOO_MANY_REQUESTS => Err(Failure::Wait(limited.unwrap_or(Duration::ZERO))),
            StatusCode::FORBIDDEN if limited.is_some() => Err(Failure::Wait(limited.unwrap_or_default())),
            StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => Err(Failure::Fatal(CollectError::Auth {
                status: status.as_u16(),
                message,
            })),
            StatusCode::NOT_FOUND => Err(Failure::Fatal(CollectError::NotFound { url: url.to_string() })),
            s if s.is_server_error() => Err(Failure::Retry(Some(s.as_u16()), message)),
            s => Err(Failure::Fatal(CollectError::Host {
                status: Some(s.as_u16()),
                attempts: 1,
                message,
            })),
        }
    }
}

fn short(text: &str) -> String {
    let t = text.trim();
    match t.char_indices().nth(200) {
        Some((i, _)) => format!("{}...", &t[..i]),
        None => t.to_string(),
    }
}

/// How long the host wants us to wait, if it said so. Reads `Retry-After`
/// (seconds or HTTP date) and, when the remaining quota is zero, the epoch
/// reset headers.
fn rate_limit_wait(headers: &HeaderMap) -> Option<Duration> {
    let get = |name: &str| headers.get(name).and_then(|v| v.to_str().ok()).map(str::trim);
    let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    if let Some(v) = get(RETRY_AFTER.as_str()) {
        if let Ok(secs) = v.parse::<u64>() {
            return Some(Duration::from_secs(secs));
        }
        if let Ok(date) = chrono::DateTime::parse_from_rfc2822(v) {
            let at = Duration::from_secs(date.timestamp().max(0) as u64);
            return Some(at.saturating_sub(now));
        }
    }
    let remaining = get("x-ratelimit-remaining").or_else(|| get("ratelimit-remaining"));
    if remaining == Some("0") {
        let reset = get("x-ratelimit-reset")
            .or_else(|| get("ratelimit-reset"))
            .and_then(|v| v.parse::<u64>().ok());
        return Some(reset.map_or(Duration::from_secs(60), |r| Duration::from_secs(r).saturating_sub(now)));
    }
    None
}

fn finish(project: &ProjectRef, st: CursorState) -> CodeHostResult {
    let repo = st.repo.unwrap_or_default();
    let record = ProjectRecord {
        project: project.clone(),
        description: repo.description,
        primary_language: repo.primary_language,
        license: repo.license,
        homepage: repo.homepage,
        created_at: repo.created_at.unwrap_or(st.as_of),
        fetched_at: st.as_of,
        topics: repo.topics,
    };
    let stats = RepoStats {
        project: st.project,
        contributors: st.contributors,
        commits_total: st.commits_total,
        commits_90d: st.commits_90d,
        lines_of_code: None,
        forks: repo.forks,
        stars: repo.stars,
        open_pull_requests: st.open_pull_requests,
        pull_requests_90d: st.pull_requests_90d,
        mailing_list_posts_90d: None,
        downloads_90d: None,
        last_commit_at: st.last_commit_at,
        fetched_at: st.as_of,
    };
    CodeHostResult { record, stats }
}

/// One-shot collection with a private limiter.
pub async fn collect_code_host(
    project: &ProjectRef,
    endpoint: HostEndpoint,
    cursor: Option<&CollectorCursor>,
    options: CollectOptions,
) -> Result<CodeHostResult, CollectError> {
    CodeHostCollector::new(endpoint, options).collect(project, cursor).await
}
