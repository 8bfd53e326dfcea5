//! `crossd serve`: the API plus the refresh loop.

use std::sync::Arc;

use anyhow::Context as _;
use chrono::Utc;
use crossd_api::AppState;
use crossd_core::metrics::ScoringModel;
use crossd_core::ProjectRef;
use crossd_monitor::{Deliverer, RefreshPlan, RuleConfig};
use crossd_pipeline::{refresh_live, score_and_monitor};
use crossd_store::HealthStore;
use tokio::sync::watch;

use crate::config::PlatformConfig;
use crate::{Context, Failure, ServeArgs};

pub fn run(ctx: &Context, args: ServeArgs) -> Result<(), Failure> {
    let store = Arc::new(ctx.open_store()?);
    let runtime = crate::runtime()?;
    runtime.block_on(async {
        let addr = args.listen.unwrap_or(ctx.config.api.listen);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))
            .map_err(Failure::runtime)?;
        let local = listener.local_addr().map_err(Failure::runtime)?;
        println!("listening on http://{local}");

        let (stop_tx, stop_rx) = watch::channel(false);
        let state = AppState::new(store.clone(), ctx.config.api.write_token.clone());
        let mut api_stop = stop_rx.clone();
        let api = tokio::spawn(crossd_api::serve(listener, state, async move {
            let _ = api_stop.wait_for(|stop| *stop).await;
        }));
        let monitor = tokio::spawn(monitor_loop(store.clone(), ctx.config.clone(), args.live, stop_rx));

        shutdown_signal().await;
        tracing::info!("shutting down");
        let _ = stop_tx.send(true);
        api.await.map_err(Failure::runtime)?.map_err(Failure::runtime)?;
        monitor.await.map_err(Failure::runtime)?;
        tracing::info!(records = store.len(), "store closed");
        Ok(())
    })
}

async fn shutdown_signal() {
    let ctrl_c = async {
        if let Err(e) = tokio::signal::ctrl_c().await {
            tracing::error!(error = %e, "cannot listen for interrupts");
            std::future::pending::<()>().await;
        }
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}

async fn monitor_loop(store: Arc<HealthStore>, config: PlatformConfig, live: bool, mut stop: watch::Receiver<bool>) {
    let Ok(mut plan) = config.plan() else {
        return;
    };
    let model = config.scoring_model();
    let deliverer = Deliverer::new(config.delivery());
    let rules = config.rules();
    let mut interval = tokio::time::interval(config.tick());
    loop {
        tokio::select! {
            _ = interval.tick() => {}
            _ = stop.wait_for(|s| *s) => return,
        }
        let due = schedule(&store, &mut plan);
        for project in due {
            if *stop.borrow() {
                return;
            }
            if let Err(e) = refresh_one(&store, &config, &model, &deliverer, &rules, &project, live).await {
                tracing::warn!(project, error = %e, "refresh failed");
            }
            if let Some(snapshot) = store.get_latest_snapshot(&project) {
                let step = chrono::Duration::from_std(plan.cadence_for(snapshot.is_critical)).unwrap_or(chrono::Duration::MAX);
                plan.track(&project, snapshot.is_critical, Utc::now() + step);
            }
        }
    }
}

/// Tracks every stored project and returns the ones due now. A project
/// enters the plan due one cadence after its latest snapshot.
fn schedule(store: &HealthStore, plan: &mut RefreshPlan) -> Vec<String> {
    let now = Utc::now();
    for project in store.project_ids() {
        if plan.entry(&project).is_some() {
            continue;
        }
        let snapshot = store.get_latest_snapshot(&project);
        let critical = snapshot.as_ref().is_some_and(|s| s.is_critical);
        let step = chrono::Duration::from_std(plan.cadence_for(critical)).unwrap_or(chrono::Duration::MAX);
        let due = snapshot.map_or(now, |s| s.computed_at.checked_add_signed(step).unwrap_or(now));
        plan.track(&project, critical, due);
    }
    plan.tick(now)
}

async fn refresh_one(
    store: &HealthStore,
    config: &PlatformConfig,
    model: &ScoringModel<'_>,
    deliverer: &Deliverer,
    rules: &RuleConfig,
    project: &str,
    live: bool,
) -> anyhow::Result<()> {
    let reference = ProjectRef::parse(project)?;
    let endpoint = if live { config.endpoint(reference.platform()) } else { None };
    let alerts = match endpoint {
        Some(endpoint) => {
            let options = config.collect_options(reference.platform(), None);
            refresh_live(store, model, &reference, endpoint, options, deliverer, rules)
                .await?
                .alerts
        }
        None => {
            let only = [project.to_string()];
            score_and_monitor(store, model, Some(&only), Utc::now(), deliverer, rules).await?.1
        }
    };
    tracing::info!(project, alerts = alerts.len(), "refreshed");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crossd_core::time::parse_rfc3339;

    #[test]
    fn unscored_projects_are_due_immediately() {
        let store = HealthStore::in_memory();
        let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus-v1");
        crossd_pipeline::ingest_fixtures(&store, &root, None).unwrap();
        let mut plan = RefreshPlan::default();
        assert_eq!(schedule(&store, &mut plan).len(), 5);
        assert!(schedule(&store, &mut plan).is_empty());
    }

    #[test]
    fn scored_projects_wait_for_their_cadence() {
        let store = HealthStore::in_memory();
        let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus-v1");
        crossd_pipeline::ingest_fixtures(&store, &root, None).unwrap();
        let now = Utc::now();
        crossd_pipeline::score_projects(&store, &ScoringModel::bundled_defaults(), None, now).unwrap();
        let mut plan = RefreshPlan::default();
        assert!(schedule(&store, &mut plan).is_empty());
        let gamma = plan.entry("gitlab:demo/gamma").unwrap();
        assert_eq!(gamma.cadence, plan.cadence_for(true));
        assert!(gamma.next_due > now);
        assert!(gamma.next_due > parse_rfc3339("2024-01-01T00:00:00Z").unwrap());
    }
}
