//! Refresh scheduling, change detection between consecutive snapshots and
//! push delivery of alerts to watchlist subscribers.

mod deliver;
mod fanout;
mod plan;
mod rules;
mod transition;

pub use deliver::{webhook_body, DeliveryConfig, DeliveryOutcome, Deliverer, RULE_HEADER};
pub use fanout::{alert_id, fan_out};
pub use plan::{PlanEntry, PlanError, RefreshPlan};
pub use rules::{evaluate_rules, Finding, ProjectState, RuleConfig};
pub use transition::{process_transition, project_state};
