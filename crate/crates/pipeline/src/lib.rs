//! The operator pipeline: fixture ingestion, scoring at an instant, live
//! refresh from a code host, and the score table.

mod ingest;
mod refresh;
mod score;
mod table;

use crossd_collectors::{CollectError, FixtureError};
use crossd_core::metrics::EngineError;
use crossd_core::time::Timestamp;
use crossd_store::StoreError;
use thiserror::Error;

pub use ingest::{fixture_records, ingest_fixtures, IngestReport};
pub use refresh::{refresh_live, RefreshReport};
pub use score::{score_and_monitor, score_projects, ScoreReport};
pub use table::score_table;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("scoring failed: {0}")]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Collect(#[from] CollectError),
    #[error("unknown project `{0}`")]
    UnknownProject(String),
    #[error("`{0}` is not a valid project id")]
    BadProjectId(String),
    #[error("no statistics for `{project}` as of {as_of}")]
    NoStats { project: String, as_of: Timestamp },
}

impl PipelineError {
    /// Whether the failure is caused by the caller's input rather than the
    /// environment.
    pub fn is_user_error(&self) -> bool {
        match self {
            PipelineError::Fixture(FixtureError::Io { .. }) => false,
            PipelineError::Fixture(_) => true,
            PipelineError::Store(e) => e.is_user_error(),
            PipelineError::Engine(_) => false,
            PipelineError::Collect(e) => matches!(e, CollectError::BadCursor(_) | CollectError::NotFound { .. }),
            PipelineError::UnknownProject(_) | PipelineError::BadProjectId(_) | PipelineError::NoStats { .. } => true,
        }
    }
}
