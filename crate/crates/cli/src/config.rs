//! The platform configuration file.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crossd_collectors::{CollectOptions, Dialect, HostEndpoint};
use crossd_core::metrics::ScoringModel;
use crossd_core::time::Timestamp;
use crossd_core::{CriticalityParams, MetricRegistry, Platform};
use crossd_monitor::{DeliveryConfig, RefreshPlan, RuleConfig};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformConfig {
    pub store_path: Option<PathBuf>,
    #[serde(default)]
    pub fixture_paths: Vec<PathBuf>,
    #[serde(default)]
    pub hosts: BTreeMap<String, HostConfig>,
    pub criticality: Option<CriticalityParams>,
    #[serde(default)]
    pub category_weights: BTreeMap<String, f64>,
    #[serde(default)]
    pub cadence: CadenceConfig,
    #[serde(default)]
    pub api: ApiConfig,
    #[serde(default)]
    pub alerts: AlertConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostConfig {
    pub base_url: String,
    #[serde(default)]
    pub token: Option<String>,
    /// `github` or `gitlab`; defaults to the platform's own API.
    #[serde(default)]
    pub dialect: Option<String>,
    #[serde(default)]
    pub per_page: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CadenceConfig {
    pub normal_hours: f64,
    pub critical_hours: f64,
    /// How often the monitor loop looks for due projects.
    pub tick_seconds: f64,
}

impl Default for CadenceConfig {
    fn default() -> Self {
        CadenceConfig {
            normal_hours: 24.0,
            critical_hours: 6.0,
            tick_seconds: 60.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApiConfig {
    pub listen: SocketAddr,
    #[serde(default)]
    pub write_token: Option<String>,
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            write_token: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlertConfig {
    pub activity_drop_ratio: f64,
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub workers: usize,
    #[serde(default)]
    pub log_path: Option<PathBuf>,
}

impl Default for AlertConfig {
    fn default() -> Self {
        let d = DeliveryConfig::default();
        AlertConfig {
            activity_drop_ratio: RuleConfig::default().activity_drop_ratio,
            max_attempts: d.max_attempts,
            backoff_base_ms: d.backoff_base.as_millis() as u64,
            workers: d.workers,
            log_path: None,
        }
    }
}

fn hours(h: f64) -> Option<Duration> {
    Duration::try_from_secs_f64(h * 3600.0).ok()
}

impl PlatformConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let config: PlatformConfig = toml::from_str(&text).map_err(|e| ConfigError::Invalid {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate().map_err(|message| ConfigError::Invalid {
            path: path.to_path_buf(),
            message,
        })?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), String> {
        if let Some(params) = &self.criticality {
            params.validate().map_err(|e| format!("criticality: {e}"))?;
        }
        let registry = MetricRegistry::bundled();
        for (id, w) in &self.category_weights {
            if registry.get(id).is_none() {
                return Err(format!("category_weights: unknown metric `{id}`"));
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(format!("category_weights: `{id}` must be a finite weight >= 0"));
            }
        }
        self.plan().map_err(|e| format!("cadence: {e}"))?;
        if !(self.cadence.tick_seconds > 0.0 && self.cadence.tick_seconds.is_finite()) {
            return Err("cadence: tick_seconds must be positive".into());
        }
        let ratio = self.alerts.activity_drop_ratio;
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err("alerts: activity_drop_ratio must lie in (0, 1)".into());
        }
        if self.alerts.max_attempts == 0 || self.alerts.workers == 0 {
            return Err("alerts: max_attempts and workers must be positive".into());
        }
        for (name, host) in &self.hosts {
            name.parse::<Platform>().map_err(|_| format!("hosts: unknown platform `{name}`"))?;
            if !(host.base_url.starts_with("http://") || host.base_url.starts_with("https://")) {
                return Err(format!("hosts.{name}: base_url must be an http(s) URL"));
            }
            if host.per_page == Some(0) {
                return Err(format!("hosts.{name}: per_page must be positive"));
            }
            if let Some(d) = &host.dialect {
                parse_dialect(d).ok_or_else(|| format!("hosts.{name}: unknown dialect `{d}`"))?;
            }
        }
        Ok(())
    }

    pub fn scoring_model(&self) -> ScoringModel<'static> {
        let mut model = ScoringModel::bundled_defaults();
        if let Some(params) = &self.criticality {
            model.params = params.clone();
        }
        model.category_weights.extend(self.category_weights.clone());
        model
    }

    pub fn plan(&self) -> Result<RefreshPlan, String> {
        let normal = hours(self.cadence.normal_hours).ok_or("normal_hours must be a non-negative number")?;
        let critical = hours(self.cadence.critical_hours).ok_or("critical_hours must be a non-negative number")?;
        RefreshPlan::new(normal, critical).map_err(|e| e.to_string())
    }

    pub fn rules(&self) -> RuleConfig {
        RuleConfig {
            activity_drop_ratio: self.alerts.activity_drop_ratio,
        }
    }

    pub fn delivery(&self) -> DeliveryConfig {
        DeliveryConfig {
            max_attempts: self.alerts.max_attempts,
            backoff_base: Duration::from_millis(self.alerts.backoff_base_ms),
            workers: self.alerts.workers,
            alert_log: self.alerts.log_path.clone(),
            ..DeliveryConfig::default()
        }
    }

    /// The code-host endpoint for a platform: the configured one, else the
    /// public default.
    pub fn endpoint(&self, platform: Platform) -> Option<HostEndpoint> {
        match self.hosts.get(platform.as_str()) {
            Some(host) => {
                let dialect = host
                    .dialect
                    .as_deref()
                    .and_then(parse_dialect)
                    .unwrap_or_else(|| Dialect::for_platform(platform));
                Some(HostEndpoint::new(host.base_url.clone(), dialect).with_token(host.token.clone()))
            }
            None => HostEndpoint::default_for(platform),
        }
    }

    pub fn collect_options(&self, platform: Platform, as_of: Option<Timestamp>) -> CollectOptions {
        let mut options = CollectOptions {
            as_of,
            ..CollectOptions::default()
        };
        if let Some(n) = self.hosts.get(platform.as_str()).and_then(|h| h.per_page) {
            options.per_page = n;
        }
        options
    }

    pub fn tick(&self) -> Duration {
        Duration::from_secs_f64(self.cadence.tick_seconds)
    }
}

fn parse_dialect(s: &str) -> Option<Dialect> {
    match s {
        "github" => Some(Dialect::Github),
        "gitlab" => Some(Dialect::Gitlab),
        _ => None,
    }
}
