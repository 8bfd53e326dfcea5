//! The metrics engine: pure functions from collected facts to observations,
//! normalized category scores, the criticality score and the critical flag.

mod attestations;
mod category;
mod criticality;
mod dependency;
mod normalize;
mod quantitative;
mod snapshot;
mod vulns;

use thiserror::Error;

pub use attestations::apply_attestations;
pub use category::category_score;
pub use criticality::{criticality_score, criticality_score_with, is_critical};
pub use dependency::{dependency_analysis, DependencyGraph};
pub use normalize::normalize_metric;
pub use quantitative::{compute_quantitative, ENGINE_SOURCE};
pub use snapshot::{
    assess_project, build_snapshot, input_digest, open_vulnerable_packages, Assessment, ProjectInputs, ScoringModel,
};
pub use vulns::{time_to_fix, vulns_as_of};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("all criticality weights are zero")]
    AllWeightsZero,
    #[error("signal `{0}`: weight must be finite and >= 0")]
    BadWeight(String),
    #[error("signal `{0}`: threshold must be > 0")]
    BadThreshold(String),
    #[error("weight references unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("weight for `{metric_id}` belongs to focus {actual}, not {requested}")]
    ForeignWeight {
        metric_id: String,
        actual: &'static str,
        requested: &'static str,
    },
    #[error("invalid critical policy: {0}")]
    Policy(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("value {0} is negative")]
    Negative(f64),
    #[error("value is not finite")]
    NonFinite,
    #[error("identity normalization needs a value in [0, 1], got {0}")]
    OutsideUnitInterval(f64),
    #[error("normalization cap must be > 0")]
    BadCap,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error("metric `{metric_id}`: {source}")]
    Domain {
        metric_id: String,
        #[source]
        source: DomainError,
    },
}
