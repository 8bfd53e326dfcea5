//! The metric registry: every metric the platform knows, with its
//! normalization and default category weight.
//!
//! The bundled registry ships as `data/metric_registry.json` and is served
//! verbatim by the API as the machine-readable metric catalogue.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Direction, MetricDefinition, MetricKind, NormalizationMethod};

const BUNDLED: &str = include_str!("../data/metric_registry.json");

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("registry is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate metric id `{0}`")]
    Duplicate(String),
    #[error("metric `{id}`: {reason}")]
    Invalid { id: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrdinalScale {
    pub min: i64,
    pub max: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    #[serde(flatten)]
    pub definition: MetricDefinition,
    pub default_weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal_levels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryDocument {
    pub version: String,
    pub ordinal_scale: OrdinalScale,
    pub metrics: Vec<RegistryEntry>,
}

#[derive(Debug, Clone)]
pub struct MetricRegistry {
    doc: RegistryDocument,
    index: HashMap<String, usize>,
}

impl MetricRegistry {
    /// The registry compiled into the binary.
    pub fn bundled() -> &'static MetricRegistry {
        static REGISTRY: OnceLock<MetricRegistry> = OnceLock::new();
        REGISTRY.get_or_init(|| MetricRegistry::from_json(BUNDLED).expect("bundled registry is valid"))
    }

    pub fn bundled_json() -> &'static str {
        BUNDLED
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let doc: RegistryDocument = serde_json::from_str(text)?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: RegistryDocument) -> Result<Self, RegistryError> {
        let mut index = HashMap::new();
        for (i, entry) in doc.metrics.iter().enumerate() {
            let def = &entry.definition;
            let invalid = |reason: &str| RegistryError::Invalid {
                id: def.id.clone(),
                reason: reason.to_string(),
            };
            if def.id.is_empty()
                || !def.id.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            {
                return Err(invalid("id must be snake_case"));
            }
            if index.insert(def.id.clone(), i).is_some() {
                return Err(RegistryError::Duplicate(def.id.clone()));
            }
            if !(def.normalization.cap.is_finite() && def.normalization.cap > 0.0) {
                return Err(invalid("normalization cap must be > 0"));
            }
            if !(entry.default_weight.is_finite() && entry.default_weight >= 0.0) {
                return Err(invalid("default weight must be >= 0"));
            }
            if def.kind == MetricKind::Qualitative {
                if def.direction != Direction::HigherIsBetter {
                    return Err(invalid("qualitative metrics must be higher_is_better"));
                }
                if def.normalization.method == NormalizationMethod::Identity {
                    return Err(invalid("qualitative ordinals need a scaling normalization"));
                }
                if doc.ordinal_scale.min != 0 || doc.ordinal_scale.max != crate::domain::ORDINAL_MAX {
                    return Err(invalid("qualitative metrics use the 0-4 ordinal scale"));
                }
            }
        }
        Ok(MetricRegistry { doc, index })
    }

    pub fn get(&self, id: &str) -> Option<&MetricDefinition> {
        self.index.get(id).map(|i| &self.doc.metrics[*i].definition)
    }

    pub fn entry(&self, id: &str) -> Option<&RegistryEntry> {
        self.index.get(id).map(|i| &self.doc.metrics[*i])
    }

    /// Definitions in registry order.
    pub fn definitions(&self) -> impl Iterator<Item = &MetricDefinition> {
        self.doc.metrics.iter().map(|e| &e.definition)
    }

    pub fn default_weights(&self) -> BTreeMap<String, f64> {
        self.doc
            .metrics
            .iter()
            .map(|e| (e.definition.id.clone(), e.default_weight))
            .collect()
    }

    pub fn document(&self) -> &RegistryDocument {
        &self.doc
    }

    pub fn len(&self) -> usize {
        self.doc.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc.metrics.is_empty()
    }
}
