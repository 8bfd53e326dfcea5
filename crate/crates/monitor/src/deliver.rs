use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use crossd_core::time::format_rfc3339;
use crossd_core::{Alert, Delivery, DeliveryState, WatchlistSubscription};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::io::AsyncWriteExt;
use tokio::sync::Mutex;

pub const RULE_HEADER: &str = "X-CrOSSD-Rule";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryConfig {
    pub max_attempts: u32,
    pub backoff_base: Duration,
    pub backoff_max: Duration,
    pub workers: usize,
    pub timeout: Duration,
    /// Where log-sink alerts are appended; without one they only go to the
    /// tracing log.
    pub alert_log: Option<PathBuf>,
}

impl Default for DeliveryConfig {
    fn default() -> Self {
        DeliveryConfig {
            max_attempts: 5,
            backoff_base: Duration::from_millis(500),
            backoff_max: Duration::from_secs(30),
            workers: 4,
            timeout: Duration::from_secs(10),
            alert_log: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryOutcome {
    pub state: DeliveryState,
    pub attempts: u32,
    pub error: Option<String>,
}

/// The JSON document POSTed to webhooks and written to the alert log.
pub fn webhook_body(alert: &Alert) -> Value {
    json!({
        "alert_id": alert.id,
        "project": alert.project,
        "rule": alert.rule,
        "triggered_at": format_rfc3339(&alert.triggered_at),
        "payload": alert.payload,
    })
}

pub struct Deliverer {
    client: reqwest::Client,
    config: DeliveryConfig,
    log_lock: Mutex<()>,
}

impl Deliverer {
    pub fn new(config: DeliveryConfig) -> Self {
        let client = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .expect("http client");
        Deliverer {
            client,
            config,
            log_lock: Mutex::new(()),
        }
    }

    pub fn config(&self) -> &DeliveryConfig {
        &self.config
    }

    /// Delivers one alert. Failures end up in the outcome, never as errors.
    pub async fn deliver(&self, alert: &Alert, target: &Delivery) -> DeliveryOutcome {
        match target {
            Delivery::Webhook(uri) => self.post(alert, uri).await,
            Delivery::LogSink => self.append_log(alert).await,
        }
    }

    async fn post(&self, alert: &Alert, uri: &str) -> DeliveryOutcome {
        let body = webhook_body(alert);
        let attempts = self.config.max_attempts.max(1);
        let mut last_error = String::new();
        for attempt in 1..=attempts {
            let result = self
                .client
                .post(uri)
                .header(RULE_HEADER, alert.rule.as_str())
                .json(&body)
                .send()
                .await;
            match result {
                Ok(resp) if resp.status().is_success() => {
                    return DeliveryOutcome {
                        state: DeliveryState::Delivered,
                        attempts: attempt,
                        error: None,
                    }
                }
                Ok(resp) => last_error = format!("webhook answered {}", resp.status()),
                Err(e) => last_error = e.to_string(),
            }
            tracing::debug!(alert = %alert.id, attempt, error = %last_error, "webhook delivery failed");
            if attempt < attempts {
                let factor = 2u32.saturating_pow(attempt - 1);
                let delay = self.config.backoff_base.saturating_mul(factor).min(self.config.backoff_max);
                tokio::time::sleep(delay).await;
            }
        }
        tracing::warn!(alert = %alert.id, uri, attempts, error = %last_error, "webhook delivery gave up");
        DeliveryOutcome {
            state: DeliveryState::Failed,
            attempts,
            error: Some(last_error),
        }
    }

    async fn append_log(&self, alert: &Alert) -> DeliveryOutcome {
        let line = format!("{}\n", webhook_body(alert));
        let Some(path) = &self.config.alert_log else {
            tracing::info!(target: "crossd::alerts", alert = %line.trim_end());
            return DeliveryOutcome {
                state: DeliveryState::Delivered,
                attempts: 1,
                error: None,
            };
        };
        let _guard = self.log_lock.lock().await;
        let written = async {
            let mut file = tokio::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .await?;
            file.write_all(line.as_bytes()).await?;
            file.flush().await
        }
        .await;
        match written {
            Ok(()) => DeliveryOutcome {
                state: DeliveryState::Delivered,
                attempts: 1,
                error: None,
            },
            Err(e) => DeliveryOutcome {
                state: DeliveryState::Failed,
                attempts: 1,
                error: Some(format!("{}: {e}", path.display())),
            },
        }
    }

    /// Delivers alerts on a bounded worker pool. Alerts whose subscription is
    /// unknown are marked failed.
    pub async fn deliver_all(
        &self,
        alerts: Vec<Alert>,
        subscriptions: &[WatchlistSubscription],
    ) -> Vec<(Alert, DeliveryOutcome)> {
        let targets: BTreeMap<&str, &Delivery> = subscriptions.iter().map(|s| (s.id.as_str(), &s.delivery)).collect();
        stream::iter(alerts)
            .map(|alert| {
                let target = targets.get(alert.subscription_id.as_str()).copied();
                async move {
                    let outcome = match target {
                        Some(t) => self.deliver(&alert, t).await,
                        None => DeliveryOutcome {
                            state: DeliveryState::Failed,
                            attempts: 0,
                            error: Some(format!("subscription `{}` no longer exists", alert.subscription_id)),
                        },
                    };
                    (alert, outcome)
                }
            })
            .buffer_unordered(self.config.workers.max(1))
            .collect()
            .await
    }
}
