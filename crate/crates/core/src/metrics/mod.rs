//! Per requirement–class metric families.
//!
//! * R2RS: similarity of a new requirement to the requirements that
//!   recently touched a class, folded by a distribution score.
//! * R2C: direct similarity of a requirement to the class source text.
//! * TLCC: recency-weighted frequency of past requirement touches.
//! * SQ / CKJM: externally computed code metrics, joined by release.

mod external;
mod history;
mod tlcc;

pub use external::{ClassTextSource, ClassTextTable, ExternalMetricsTable};
pub use history::{ClassHistory, HistoryIndex, HistoryPolicy, HistorySnapshot, RequirementsSet, SnapshotMember, REQUIREMENTS_SET_CAP};
pub use tlcc::{tlcc_lin, tlcc_log, tlcc_scp, TlccError};

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textsim::{CorpusStats, TermSimilarity, Technique, TokenStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    R2rs,
    R2c,
    Tlcc,
    Sq,
    Ckjm,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::R2rs, Family::R2c, Family::Tlcc, Family::Sq, Family::Ckjm];

    pub fn code(self) -> &'static str {
        match self {
            Family::R2rs => "R2RS",
            Family::R2c => "R2C",
            Family::Tlcc => "TLCC",
            Family::Sq => "SQ",
            Family::Ckjm => "CKJM",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Family::ALL.into_iter().find(|f| f.code().eq_ignore_ascii_case(code))
    }

    pub fn is_external(self) -> bool {
        matches!(self, Family::Sq | Family::Ckjm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Distribution {
    Max,
    Av,
    Top5,
}

impl Distribution {
    pub const ALL: [Distribution; 3] = [Distribution::Max, Distribution::Av, Distribution::Top5];

    pub fn code(self) -> &'static str {
        match self {
            Distribution::Max => "Max",
            Distribution::Av => "Av",
            Distribution::Top5 => "Top5",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Distribution::ALL.into_iter().find(|d| d.code().eq_ignore_ascii_case(code))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TlccKind {
    Scp,
    Lin,
    Log,
}

const METRIC_NAMES: [&str; 34] = [
    "R2RS_VSM_Max",
    "R2RS_VSM_Av",
    "R2RS_VSM_Top5",
    "R2RS_JSD_Max",
    "R2RS_JSD_Av",
    "R2RS_JSD_Top5",
    "R2RS_GC_Max",
    "R2RS_GC_Av",
    "R2RS_GC_Top5",
    "R2RS_OPC_Max",
    "R2RS_OPC_Av",
    "R2RS_OPC_Top5",
    "R2RS_CMC_Max",
    "R2RS_CMC_Av",
    "R2RS_CMC_Top5",
    "R2RS_BC_Max",
    "R2RS_BC_Av",
    "R2RS_BC_Top5",
    "R2C_VSM",
    "R2C_JSD",
    "TLCC_SCP",
    "TLCC_Lin",
    "TLCC_Log",
    "SQ_Com",
    "SQ_NCLOC",
    "SQ_Viol",
    "CKJM_WMC",
    "CKJM_DIT",
    "CKJM_NOC",
    "CKJM_CBO",
    "CKJM_RFC",
    "CKJM_LCOM",
    "CKJM_CA",
    "CKJM_NPM",
];

/// One of the 34 named metric slots. The CMC slots are reserved and never
/// populated by this crate.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Metric(u8);

impl Metric {
    pub const COUNT: usize = METRIC_NAMES.len();

    pub fn all() -> impl Iterator<Item = Metric> {
        (0..Self::COUNT as u8).map(Metric)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        METRIC_NAMES[self.index()]
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        METRIC_NAMES.iter().position(|n| *n == name).map(|i| Metric(i as u8))
    }

    pub fn family(self) -> Family {
        match self.0 {
            0..=17 => Family::R2rs,
            18..=19 => Family::R2c,
            20..=22 => Family::Tlcc,
            23..=25 => Family::Sq,
            _ => Family::Ckjm,
        }
    }

    pub fn r2rs(technique: Technique, dist: Distribution) -> Metric {
        let t = match technique {
            Technique::Vsm => 0,
            Technique::Jsd => 1,
            Technique::Gc => 2,
            Technique::Opc => 3,
            Technique::Bc => 5,
        };
        Metric((t * 3 + dist as usize) as u8)
    }

    pub fn r2c(technique: Technique) -> Option<Metric> {
        match technique {
            Technique::Vsm => Some(Metric(18)),
            Technique::Jsd => Some(Metric(19)),
            _ => None,
        }
    }

    pub fn tlcc(kind: TlccKind) -> Metric {
        Metric(20 + kind as u8)
    }

    pub fn is_reserved(self) -> bool {
        (12..=14).contains(&self.0)
    }
}

impl fmt::Debug for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Values for every metric slot; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    values: Vec<Option<f64>>,
}

impl Default for MetricVector {
    fn default() -> Self {
        MetricVector {
            values: alloc::vec![None; Metric::COUNT],
        }
    }
}

impl MetricVector {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.values[metric.index()]
    }

    pub fn set(&mut self, metric: Metric, value: Option<f64>) {
        self.values[metric.index()] = value;
    }

    pub fn select(&self, features: &[Metric]) -> Vec<Option<f64>> {
        features.iter().map(|m| self.get(*m)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("unknown metric name {0}")]
    UnknownMetricName(alloc::string::String),
    #[error("non-numeric value {value:?} for {metric}")]
    NonNumericValue {
        metric: alloc::string::String,
        value: alloc::string::String,
    },
    #[error("technique {0} is not available for requirement-to-class similarity")]
    UnsupportedTechnique(&'static str),
}

/// Folds pairwise scores into one value. Empty input gives 0.
pub fn distribution_score(scores: &[f64], kind: Distribution) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    match kind {
        Distribution::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Distribution::Av => scores.iter().sum::<f64>() / scores.len() as f64,
        Distribution::Top5 => {
            let mut sorted = scores.to_vec();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let top = &sorted[..sorted.len().min(5)];
            top.iter().sum::<f64>() / top.len() as f64
        }
    }
}

/// Similarity of a query requirement to a class's requirements set.
pub fn r2rs(
    query: &TokenStream,
    members: &[TokenStream],
    technique: Technique,
    kind: Distribution,
    stats: &CorpusStats,
    sim: &dyn TermSimilarity,
) -> f64 {
    let scores: Vec<f64> = members
        .iter()
        .map(|m| technique.score(query, m, stats, sim))
        .collect();
    distribution_score(&scores, kind)
}

/// Direct similarity of a requirement to a class's (identifier-split) text.
pub fn r2c(query: &TokenStream, class_text: &TokenStream, technique: Technique, stats: &CorpusStats) -> Result<f64, MetricError> {
    match technique {
        Technique::Vsm => Ok(crate::textsim::vsm_similarity(query, class_text, stats)),
        Technique::Jsd => Ok(crate::textsim::jsd_similarity(query, class_text)),
        other => Err(MetricError::UnsupportedTechnique(other.code())),
    }
}

/// Precomputed inputs for one requirement–class pair.
pub struct PairInputs<'a> {
    pub class_path: &'a str,
    /// Release used to look up external metrics; empty when unknown.
    pub release_id: &'a str,
    /// Query-vs-member scores over the class's requirements set, per technique.
    pub set_scores: &'a [(Technique, Vec<f64>)],
    pub r2c_scores: &'a [(Technique, f64)],
    pub history: &'a ClassHistory,
    pub externals: &'a ExternalMetricsTable,
}

/// Fills every slot of the enabled families. An empty class history gives
/// 0 for the TLCC slots; absent externals stay missing.
pub fn assemble(pair: &PairInputs<'_>, families: &[Family], distributions: &[Distribution]) -> MetricVector {
    let mut v = MetricVector::default();
    if families.contains(&Family::R2rs) {
        for (technique, scores) in pair.set_scores {
            for &d in distributions {
                v.set(Metric::r2rs(*technique, d), Some(distribution_score(scores, d)));
            }
        }
    }
    if families.contains(&Family::R2c) {
        for (technique, score) in pair.r2c_scores {
            if let Some(m) = Metric::r2c(*technique) {
                v.set(m, Some(*score));
            }
        }
    }
    if families.contains(&Family::Tlcc) {
        let flags = &pair.history.touch_flags;
        v.set(Metric::tlcc(TlccKind::Scp), Some(tlcc_scp(flags).unwrap_or(0.0)));
        v.set(Metric::tlcc(TlccKind::Lin), Some(tlcc_lin(flags).unwrap_or(0.0)));
        v.set(Metric::tlcc(TlccKind::Log), Some(tlcc_log(flags).unwrap_or(0.0)));
    }
    for m in Metric::all().filter(|m| m.family().is_external() && families.contains(&m.family())) {
        v.set(m, pair.externals.get(pair.release_id, pair.class_path, m));
    }
    v
}
