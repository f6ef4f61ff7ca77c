//! The TOML run configuration, command-line overrides and the config hash
//! stamped into every output.

use std::path::{Path, PathBuf};

use reqimpact_core::dataset::{MatrixConfig, SampleSpec, TlccGranularity};
use reqimpact_core::learn::{LearnerKind, LearnerParams, LearnerSpec, ProtocolOptions, SelectionOptions};
use reqimpact_core::linker::DEFAULT_REGEX_TEMPLATE;
use reqimpact_core::metrics::{Distribution, Family, HistoryPolicy, REQUIREMENTS_SET_CAP};
use reqimpact_core::textsim::Technique;
use reqimpact_core::LinkConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub commits: PathBuf,
    pub issues: PathBuf,
    #[serde(default)]
    pub releases: Option<PathBuf>,
    #[serde(default)]
    pub externals: Option<PathBuf>,
    #[serde(default)]
    pub class_texts: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
}

impl Default for Output {
    fn default() -> Self {
        Output { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Linking {
    pub regex_template: String,
    pub class_extensions: Vec<String>,
}

impl Default for Linking {
    fn default() -> Self {
        Linking {
            regex_template: DEFAULT_REGEX_TEMPLATE.to_string(),
            class_extensions: vec![".java".to_string()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Metrics {
    pub families: Vec<String>,
    pub techniques: Vec<String>,
    pub distributions: Vec<String>,
    /// `release` or `requirement`.
    pub tlcc_granularity: String,
    /// `all-linked` or `features-only`.
    pub history: String,
    pub set_size: usize,
}

impl Default for Metrics {
    fn default() -> Self {
        Metrics {
            families: Family::ALL.iter().map(|f| f.code().to_string()).collect(),
            techniques: Technique::ALL.iter().map(|t| t.code().to_string()).collect(),
            distributions: Distribution::ALL.iter().map(|d| d.code().to_string()).collect(),
            tlcc_granularity: "release".into(),
            history: "all-linked".into(),
            set_size: REQUIREMENTS_SET_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Learner {
    /// `dt`, `rf`, `nb`, `logistic` or `bagging`.
    pub kind: String,
    #[serde(flatten)]
    pub params: LearnerParams,
}

impl Default for Learner {
    fn default() -> Self {
        Learner {
            kind: "dt".into(),
            params: LearnerParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub repeats: usize,
    pub train_fraction: f64,
    pub pca_variance: Option<f64>,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            repeats: 20,
            train_fraction: 0.8,
            pca_variance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Selecting {
    pub search_repeats: usize,
    pub stale_limit: usize,
    pub min_improvement: f64,
}

impl Default for Selecting {
    fn default() -> Self {
        let d = SelectionOptions::default();
        Selecting {
            search_repeats: d.search.repeats,
            stale_limit: d.stale_limit,
            min_improvement: d.min_improvement,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ranking {
    pub bins: usize,
}

impl Default for Ranking {
    fn default() -> Self {
        Ranking {
            bins: reqimpact_core::learn::DEFAULT_BINS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub project_key: String,
    #[serde(default)]
    pub seed: u64,
    pub inputs: Inputs,
    /// Not part of the hash: where results go does not change them.
    #[serde(default, skip_serializing)]
    pub output: Output,
    #[serde(default)]
    pub linking: Linking,
    #[serde(default)]
    pub metrics: Metrics,
    #[serde(default)]
    pub learner: Learner,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub selection: Selecting,
    #[serde(default)]
    pub igr: Ranking,
    /// Directory relative input and output paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Flag values that replace config entries when given.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub families: Option<Vec<String>>,
    pub techniques: Option<Vec<String>>,
    pub distributions: Option<Vec<String>>,
    pub learner: Option<String>,
    pub repeats: Option<usize>,
    pub out: Option<PathBuf>,
    /// `Some(true)` forces R2RS on, `Some(false)` removes it.
    pub r2rs: Option<bool>,
}

fn parse_list<T>(what: &str, items: &[String], parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
    items
        .iter()
        .map(|s| parse(s.trim()).ok_or_else(|| ConfigError::Invalid(format!("unknown {what} {s:?}"))))
        .collect()
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: &Path, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_path_buf(),
            source,
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, &base, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(f) = &o.families {
            self.metrics.families = f.clone();
        }
        if let Some(t) = &o.techniques {
            self.metrics.techniques = t.clone();
        }
        if let Some(d) = &o.distributions {
            self.metrics.distributions = d.clone();
        }
        if let Some(l) = &o.learner {
            self.learner.kind = l.clone();
        }
        if let Some(r) = o.repeats {
            self.sampling.repeats = r;
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        match o.r2rs {
            Some(true) if !self.families().is_ok_and(|f| f.contains(&Family::R2rs)) => {
                self.metrics.families.insert(0, Family::R2rs.code().to_string());
            }
            Some(false) => self.metrics.families.retain(|f| Family::from_code(f.trim()) != Some(Family::R2rs)),
            _ => {}
        }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    pub fn families(&self) -> Result<Vec<Family>, ConfigError> {
        let mut f = parse_list("metric family", &self.metrics.families, Family::from_code)?;
        f.sort();
        f.dedup();
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.project_key.trim().is_empty() {
            return invalid("project_key is empty");
        }
        if self.families()?.is_empty() {
            return invalid("at least one metric family must be enabled");
        }
        let m = self.matrix_config()?;
        if m.families.contains(&Family::R2rs) && (m.techniques.is_empty() || m.distributions.is_empty()) {
            return invalid("R2RS needs at least one technique and one distribution");
        }
        if m.set_size == 0 {
            return invalid("set_size must be at least 1");
        }
        if !self.linking.regex_template.contains("{KEY}") {
            return invalid("regex_template must contain {KEY}");
        }
        if self.sampling.repeats == 0 {
            return invalid("repeats must be at least 1");
        }
        if !(self.sampling.train_fraction > 0.0 && self.sampling.train_fraction < 1.0) {
            return invalid("train_fraction must lie in (0, 1)");
        }
        if self.sampling.pca_variance.is_some_and(|v| !(v > 0.0 && v <= 1.0)) {
            return invalid("pca_variance must lie in (0, 1]");
        }
        if self.igr.bins == 0 {
            return invalid("igr bins must be at least 1");
        }
        if self.selection.search_repeats == 0 {
            return invalid("search_repeats must be at least 1");
        }
        self.learner_spec()?
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn link_config(&self) -> LinkConfig {
        LinkConfig {
            project_key: self.project_key.clone(),
            regex_template: self.linking.regex_template.clone(),
            class_extensions: self.linking.class_extensions.clone(),
        }
    }

    pub fn matrix_config(&self) -> Result<MatrixConfig, ConfigError> {
        let mut techniques = parse_list("technique", &self.metrics.techniques, Technique::from_code)?;
        techniques.sort();
        techniques.dedup();
        let mut distributions = parse_list("distribution", &self.metrics.distributions, Distribution::from_code)?;
        distributions.sort();
        distributions.dedup();
        let tlcc_granularity = match self.metrics.tlcc_granularity.as_str() {
            "release" => TlccGranularity::Release,
            "requirement" => TlccGranularity::Requirement,
            other => return Err(ConfigError::Invalid(format!("unknown tlcc_granularity {other:?}"))),
        };
        let history = match self.metrics.history.as_str() {
            "all-linked" => HistoryPolicy::AllLinked,
            "features-only" => HistoryPolicy::FeaturesOnly,
            other => return Err(ConfigError::Invalid(format!("unknown history policy {other:?}"))),
        };
        Ok(MatrixConfig {
            families: self.families()?,
            techniques,
            distributions,
            tlcc_granularity,
            history,
            set_size: self.metrics.set_size,
        })
    }

    pub fn learner_spec(&self) -> Result<LearnerSpec, ConfigError> {
        let kind = LearnerKind::from_code(&self.learner.kind)
            .ok_or_else(|| ConfigError::Invalid(format!("unknown learner {:?}", self.learner.kind)))?;
        Ok(LearnerSpec {
            kind,
            params: self.learner.params.clone(),
            seed: self.seed,
        })
    }

    pub fn sample_spec(&self) -> SampleSpec {
        SampleSpec {
            seed: self.seed,
            repeats: self.sampling.repeats,
        }
    }

    pub fn protocol(&self) -> ProtocolOptions {
        ProtocolOptions {
            train_fraction: self.sampling.train_fraction,
            pca_variance: self.sampling.pca_variance,
        }
    }

    pub fn selection_options(&self) -> SelectionOptions {
        SelectionOptions {
            search: SampleSpec {
                seed: self.seed,
                repeats: self.selection.search_repeats,
            },
            final_repeats: self.sampling.repeats,
            stale_limit: self.selection.stale_limit,
            min_improvement: self.selection.min_improvement,
            protocol: self.protocol(),
        }
    }

    /// SHA-256 over the canonical JSON form of the resolved settings.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }
}
