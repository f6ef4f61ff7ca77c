//! JSON report shapes written by the CLI.

use std::io;
use std::path::Path;

use reqimpact_core::corpus::ValidationReport;
use reqimpact_core::learn::{EvalReport, Selection};
use reqimpact_core::linker::{BoundaryOutcome, ReleaseBoundary};
use reqimpact_core::{Corpus, LinkOutcome};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub config_hash: String,
    pub project_key: String,
    pub validation: ValidationReport,
    pub releases: Option<usize>,
    pub external_rows: usize,
    pub external_entries: usize,
    pub class_texts: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkEntry {
    pub key: String,
    pub kind: String,
    pub release_id: Option<String>,
    /// `linked` or `unlinked`.
    pub status: String,
    pub commits: Vec<String>,
    pub touched_files: usize,
    pub untouched_files: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DanglingReference {
    pub commit: String,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub config_hash: String,
    pub project_key: String,
    pub requirements: usize,
    pub linked: usize,
    pub unlinked: usize,
    pub commits: usize,
    pub linked_commits: usize,
    /// Share of commits that reference a known requirement.
    pub linked_commit_share: f64,
    pub boundaries: Vec<ReleaseBoundary>,
    pub warnings: Vec<String>,
    pub dangling_references: Vec<DanglingReference>,
    pub entries: Vec<LinkEntry>,
}

impl LinkReport {
    pub fn new(config_hash: &str, corpus: &Corpus, outcome: &LinkOutcome, boundaries: Option<&BoundaryOutcome>) -> Self {
        let mut entries: Vec<LinkEntry> = corpus
            .requirements()
            .iter()
            .map(|r| match outcome.change(&r.key) {
                Some(c) => LinkEntry {
                    key: r.key.clone(),
                    kind: r.kind.label().to_string(),
                    release_id: r.release_id.clone(),
                    status: "linked".into(),
                    commits: c.linked_commits.clone(),
                    touched_files: c.touched_files.len(),
                    untouched_files: c.untouched_files.len(),
                },
                None => LinkEntry {
                    key: r.key.clone(),
                    kind: r.kind.label().to_string(),
                    release_id: r.release_id.clone(),
                    status: "unlinked".into(),
                    commits: Vec::new(),
                    touched_files: 0,
                    untouched_files: 0,
                },
            })
            .collect();
        entries.sort_by(|a, b| a.key.cmp(&b.key));
        let commits = corpus.commits().len();
        LinkReport {
            config_hash: config_hash.to_string(),
            project_key: corpus.project_key().to_string(),
            requirements: corpus.requirements().len(),
            linked: outcome.changes.len(),
            unlinked: outcome.unlinked.len(),
            commits,
            linked_commits: outcome.linked_commit_count,
            linked_commit_share: if commits == 0 { 0.0 } else { outcome.linked_commit_count as f64 / commits as f64 },
            boundaries: boundaries.map(|b| b.boundaries.clone()).unwrap_or_default(),
            warnings: boundaries.map(|b| b.warnings.clone()).unwrap_or_default(),
            dangling_references: outcome
                .dangling_references
                .iter()
                .map(|(commit, key)| DanglingReference {
                    commit: commit.clone(),
                    key: key.clone(),
                })
                .collect(),
            entries,
        }
    }
}

/// Summary of a matrix build and its time split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub config_hash: String,
    pub features: Vec<String>,
    pub rows: usize,
    pub positives: usize,
    pub requirements: usize,
    pub train_fraction: f64,
    pub train_rows: usize,
    pub test_rows: usize,
    /// First requirement of the test side.
    pub boundary_key: String,
    pub empty_tlcc_rows: usize,
    pub missing_class_text_rows: usize,
    pub missing_external_rows: usize,
    /// Inputs found dated at or after their row's requirement; always 0
    /// unless the builder is broken.
    pub future_inputs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub config_hash: String,
    pub families: Vec<String>,
    #[serde(flatten)]
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutput {
    pub config_hash: String,
    #[serde(flatten)]
    pub selection: Selection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsInput {
    pub path: String,
    pub config_hash: Option<String>,
    pub learner: String,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub statistic: Option<f64>,
    pub df: Option<usize>,
    pub p: f64,
    pub alpha: f64,
    pub significant: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    /// Hash over the input reports' hashes, in order.
    pub config_hash: String,
    pub inputs: Vec<StatsInput>,
    pub tests: Vec<TestResult>,
}

pub const ALPHA: f64 = 0.05;

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}
