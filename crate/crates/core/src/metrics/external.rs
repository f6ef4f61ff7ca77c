use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use super::{Metric, MetricError};

/// Externally computed code metrics keyed by `(release, class path)`.
/// Requirements without a release use the empty release id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalMetricsTable {
    rows: BTreeMap<(String, String), BTreeMap<Metric, f64>>,
}

impl ExternalMetricsTable {
    /// Inserts one value; returns `true` when it replaced an earlier one.
    pub fn insert(&mut self, release: &str, class_path: &str, metric_name: &str, value: f64) -> Result<bool, MetricError> {
        let metric = Metric::from_name(metric_name)
            .filter(|m| m.family().is_external())
            .ok_or_else(|| MetricError::UnknownMetricName(metric_name.to_string()))?;
        if !value.is_finite() || value < 0.0 {
            return Err(MetricError::NonNumericValue {
                metric: metric_name.to_string(),
                value: alloc::format!("{value}"),
            });
        }
        Ok(self
            .rows
            .entry((release.to_string(), class_path.to_string()))
            .or_default()
            .insert(metric, value)
            .is_some())
    }

    pub fn get(&self, release: &str, class_path: &str, metric: Metric) -> Option<f64> {
        self.rows
            .get(&(release.to_string(), class_path.to_string()))
            .and_then(|m| m.get(&metric).copied())
    }

    /// Number of `(release, class, metric)` entries.
    pub fn len(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Source text of a class as of a release snapshot.
pub trait ClassTextSource {
    fn class_text(&self, release: Option<&str>, class_path: &str) -> Option<&str>;
}

/// In-memory class texts. A release-specific entry wins over one stored
/// without a release.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassTextTable {
    texts: BTreeMap<(Option<String>, String), String>,
}

impl ClassTextTable {
    pub fn insert(&mut self, release: Option<&str>, class_path: &str, text: impl Into<String>) {
        self.texts
            .insert((release.map(String::from), class_path.to_string()), text.into());
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }
}

impl ClassTextSource for ClassTextTable {
    fn class_text(&self, release: Option<&str>, class_path: &str) -> Option<&str> {
        let path = class_path.to_string();
        if let Some(r) = release {
            if let Some(t) = self.texts.get(&(Some(r.to_string()), path.clone())) {
                return Some(t);
            }
        }
        self.texts.get(&(None, path)).map(String::as_str)
    }
}
