//! Core vocabulary and pure computation for crossd.
//!
//! [`domain`] holds every entity the platform stores or serves, [`registry`]
//! the catalogue of metric definitions, and [`metrics`] the scoring engine
//! that turns collected facts into observations, category scores and the
//! criticality score.

pub mod domain;
pub mod metrics;
pub mod registry;
pub mod time;

pub use domain::*;
pub use registry::MetricRegistry;
