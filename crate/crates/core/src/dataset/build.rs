use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, FeatureRow};
use crate::corpus::{Corpus, RequirementKind};
use crate::linker::{BoundaryOutcome, LinkConfig, RequirementChange};
use crate::metrics::{
    assemble, ClassTextSource, Distribution, ExternalMetricsTable, Family, HistoryIndex, HistoryPolicy, HistorySnapshot, Metric,
    PairInputs, TlccKind, REQUIREMENTS_SET_CAP,
};
use crate::textsim::{preprocess, CorpusStats, TermSimilarity, Technique, TokenStream};

/// Where TLCC histories are cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TlccGranularity {
    /// At the boundary commit of the requirement's release.
    #[default]
    Release,
    /// Just before the requirement's own first commit.
    Requirement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub families: Vec<Family>,
    pub techniques: Vec<Technique>,
    pub distributions: Vec<Distribution>,
    pub tlcc_granularity: TlccGranularity,
    pub history: HistoryPolicy,
    pub set_size: usize,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig {
            families: Family::ALL.to_vec(),
            techniques: Technique::ALL.to_vec(),
            distributions: Distribution::ALL.to_vec(),
            tlcc_granularity: TlccGranularity::default(),
            history: HistoryPolicy::default(),
            set_size: REQUIREMENTS_SET_CAP,
        }
    }
}

impl MatrixConfig {
    fn has(&self, family: Family) -> bool {
        self.families.contains(&family)
    }

    fn r2c_techniques(&self) -> Vec<Technique> {
        self.techniques.iter().copied().filter(|t| Metric::r2c(*t).is_some()).collect()
    }

    /// Matrix columns in catalogue order.
    pub fn features(&self) -> Vec<Metric> {
        let mut out = Vec::new();
        if self.has(Family::R2rs) {
            for t in Technique::ALL.iter().filter(|t| self.techniques.contains(t)) {
                for d in Distribution::ALL.iter().filter(|d| self.distributions.contains(d)) {
                    out.push(Metric::r2rs(*t, *d));
                }
            }
        }
        if self.has(Family::R2c) {
            out.extend(self.r2c_techniques().into_iter().filter_map(Metric::r2c));
        }
        if self.has(Family::Tlcc) {
            out.extend([TlccKind::Scp, TlccKind::Lin, TlccKind::Log].map(Metric::tlcc));
        }
        out.extend(Metric::all().filter(|m| m.family().is_external() && self.has(m.family())));
        out.sort();
        out
    }
}

/// Everything the matrix builder reads.
pub struct MatrixInputs<'a> {
    pub corpus: &'a Corpus,
    pub link_config: &'a LinkConfig,
    /// Linked requirements in implementation order.
    pub changes: &'a [RequirementChange],
    pub boundaries: Option<&'a BoundaryOutcome>,
    pub externals: &'a ExternalMetricsTable,
    pub class_texts: &'a dyn ClassTextSource,
    pub term_similarity: &'a dyn TermSimilarity,
}

/// Commit positions every computed input of one requirement's rows came
/// from; all must precede `first_commit`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementAudit {
    pub requirement_key: String,
    pub first_commit: usize,
    /// First commits of the requirements whose texts fed the idf statistics.
    pub stats_documents: Vec<usize>,
    /// Latest commit read by the requirements-set history.
    pub set_history_input: Option<usize>,
    /// Latest commit read by the TLCC history.
    pub tlcc_history_input: Option<usize>,
    /// First commits of every requirements-set member used by any row.
    pub set_members: Vec<usize>,
}

impl RequirementAudit {
    /// Inputs dated at or after the requirement's first commit.
    pub fn future_inputs(&self) -> usize {
        let late = |p: &usize| *p >= self.first_commit;
        self.stats_documents.iter().filter(|p| late(p)).count()
            + self.set_members.iter().filter(|p| late(p)).count()
            + self.set_history_input.iter().filter(|p| late(p)).count()
            + self.tlcc_history_input.iter().filter(|p| late(p)).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBuild {
    pub matrix: FeatureMatrix,
    pub audit: Vec<RequirementAudit>,
    /// Rows whose TLCC history was empty and defaulted to 0.
    pub empty_tlcc_rows: usize,
    /// Rows whose class had no text available for R2C.
    pub missing_class_text_rows: usize,
    /// Rows with at least one missing external metric.
    pub missing_external_rows: usize,
}

struct Doc {
    key: String,
    first_pos: usize,
    plain: TokenStream,
    split: TokenStream,
}

/// One row per new-feature requirement and candidate class, ordered by
/// the requirement's first commit then class path.
pub fn build_matrix(inputs: &MatrixInputs<'_>, config: &MatrixConfig) -> MatrixBuild {
    let corpus = inputs.corpus;
    let features = config.features();
    let index = HistoryIndex::new(corpus, inputs.changes, inputs.link_config);
    let needs_text = config.has(Family::R2rs) || config.has(Family::R2c);

    let mut docs: Vec<Doc> = inputs
        .changes
        .iter()
        .filter_map(|c| {
            let first_pos = corpus.position(&c.first_commit_id)?;
            let text = c.requirement.text();
            Some(Doc {
                key: c.requirement.key.clone(),
                first_pos,
                plain: if needs_text { preprocess(&text, false) } else { TokenStream::default() },
                split: if needs_text { preprocess(&text, true) } else { TokenStream::default() },
            })
        })
        .collect();
    docs.sort_by(|a, b| (a.first_pos, &a.key).cmp(&(b.first_pos, &b.key)));
    let doc_of: BTreeMap<&str, usize> = docs.iter().enumerate().map(|(i, d)| (d.key.as_str(), i)).collect();

    let r2c_techniques = config.r2c_techniques();
    let mut class_tokens: BTreeMap<(Option<String>, String), Option<TokenStream>> = BTreeMap::new();
    let mut out = MatrixBuild {
        matrix: FeatureMatrix {
            features: features.iter().map(|m| m.name().to_string()).collect(),
            rows: Vec::new(),
        },
        audit: Vec::new(),
        empty_tlcc_rows: 0,
        missing_class_text_rows: 0,
        missing_external_rows: 0,
    };

    let mut queries: Vec<(&RequirementChange, usize)> = inputs
        .changes
        .iter()
        .filter(|c| c.requirement.kind == RequirementKind::NewFeature)
        .filter_map(|c| Some((c, corpus.position(&c.first_commit_id)?)))
        .collect();
    queries.sort_by(|a, b| (a.1, &a.0.requirement.key).cmp(&(b.1, &b.0.requirement.key)));

    for (change, q_pos) in queries {
        let req = &change.requirement;
        let query = &docs[doc_of[req.key.as_str()]];
        let prior: Vec<&Doc> = docs.iter().filter(|d| d.first_pos < q_pos).collect();
        let stats_plain = CorpusStats::from_documents(prior.iter().map(|d| &d.plain).chain([&query.plain]));
        let stats_split = CorpusStats::from_documents(prior.iter().map(|d| &d.split).chain([&query.split]));

        let set_snapshot = index.snapshot(q_pos, config.history);
        let tlcc_cut = tlcc_cutoff(inputs, config, req.release_id.as_deref(), q_pos);
        let tlcc_snapshot: HistorySnapshot = if tlcc_cut == q_pos {
            set_snapshot.clone()
        } else {
            index.snapshot(tlcc_cut, config.history)
        };

        let release = req.release_id.clone().unwrap_or_default();
        let mut pair_cache: BTreeMap<(usize, Technique), f64> = BTreeMap::new();
        let mut used_members: BTreeSet<usize> = BTreeSet::new();

        for class_path in change.candidates().collect::<BTreeSet<_>>() {
            let mut set_scores = Vec::new();
            if config.has(Family::R2rs) {
                let members: Vec<usize> = set_snapshot
                    .requirements_set(class_path, config.set_size)
                    .members
                    .iter()
                    .map(|k| doc_of[k.as_str()])
                    .collect();
                used_members.extend(members.iter().copied());
                for &t in &config.techniques {
                    let scores = members
                        .iter()
                        .map(|&m| {
                            *pair_cache
                                .entry((m, t))
                                .or_insert_with(|| t.score(&query.plain, &docs[m].plain, &stats_plain, inputs.term_similarity))
                        })
                        .collect();
                    set_scores.push((t, scores));
                }
            }

            let mut r2c_scores = Vec::new();
            if config.has(Family::R2c) {
                let text = class_tokens
                    .entry((req.release_id.clone(), class_path.clone()))
                    .or_insert_with(|| {
                        inputs
                            .class_texts
                            .class_text(req.release_id.as_deref(), class_path)
                            .map(|t| preprocess(t, true))
                    });
                if text.is_none() {
                    out.missing_class_text_rows += 1;
                }
                let empty = TokenStream::default();
                let class_stream = text.as_ref().unwrap_or(&empty);
                for &t in &r2c_techniques {
                    let score = crate::metrics::r2c(&query.split, class_stream, t, &stats_split).unwrap_or(0.0);
                    r2c_scores.push((t, score));
                }
            }

            let history = tlcc_snapshot.class_history(class_path);
            if config.has(Family::Tlcc) && history.touch_flags.is_empty() {
                out.empty_tlcc_rows += 1;
            }
            let vector = assemble(
                &PairInputs {
                    class_path,
                    release_id: &release,
                    set_scores: &set_scores,
                    r2c_scores: &r2c_scores,
                    history: &history,
                    externals: inputs.externals,
                },
                &config.families,
                &config.distributions,
            );
            let values = vector.select(&features);
            if features.iter().zip(&values).any(|(m, v)| m.family().is_external() && v.is_none()) {
                out.missing_external_rows += 1;
            }
            out.matrix.rows.push(FeatureRow {
                requirement_key: req.key.clone(),
                class_path: class_path.clone(),
                sequence: q_pos,
                values,
                impacted: change.touched_files.contains(class_path),
            });
        }

        out.audit.push(RequirementAudit {
            requirement_key: req.key.clone(),
            first_commit: q_pos,
            stats_documents: prior.iter().map(|d| d.first_pos).collect(),
            set_history_input: set_snapshot.latest_input_position(),
            tlcc_history_input: tlcc_snapshot.latest_input_position(),
            set_members: used_members.iter().map(|&m| docs[m].first_pos).collect(),
        });
    }
    out
}

/// Exclusive commit-position cutoff for a requirement's TLCC history.
fn tlcc_cutoff(inputs: &MatrixInputs<'_>, config: &MatrixConfig, release: Option<&str>, q_pos: usize) -> usize {
    if config.tlcc_granularity == TlccGranularity::Requirement {
        return q_pos;
    }
    let boundary = release.and_then(|r| inputs.boundaries?.for_release(r));
    match boundary {
        Some(b) if b.is_pre_history() => 0,
        Some(b) => match inputs.corpus.position(&b.boundary_commit_id) {
            Some(p) => (p + 1).min(q_pos),
            None => q_pos,
        },
        None => q_pos,
    }
}
