//! Commits, requirements and the immutable, chronologically ordered corpus
//! that every later stage reads from.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds since the Unix epoch, always UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn seconds(self) -> i64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChangeKind {
    Added,
    Modified,
    Deleted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub kind: ChangeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    pub id: String,
    pub parent_ids: Vec<String>,
    pub timestamp: Timestamp,
    pub message: String,
    pub file_changes: Vec<FileChange>,
}

impl Commit {
    /// The `(timestamp, id)` key that totally orders commits.
    pub fn order_key(&self) -> (Timestamp, &str) {
        (self.timestamp, self.id.as_str())
    }

    pub fn cmp_order(&self, other: &Commit) -> Ordering {
        self.order_key().cmp(&other.order_key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RequirementKind {
    NewFeature,
    Bug,
    Other,
}

impl RequirementKind {
    /// Maps an issue-tracker type label. Anything that is neither a new
    /// feature nor a bug becomes `Other`.
    pub fn from_issue_type(label: &str) -> Self {
        let norm: String = label
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match norm.as_str() {
            "newfeature" | "feature" => RequirementKind::NewFeature,
            "bug" | "bugfix" => RequirementKind::Bug,
            _ => RequirementKind::Other,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RequirementKind::NewFeature => "New Feature",
            RequirementKind::Bug => "Bug",
            RequirementKind::Other => "Other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub key: String,
    pub kind: RequirementKind,
    pub title: String,
    pub description: String,
    pub created: Timestamp,
    pub release_id: Option<String>,
}

impl Requirement {
    /// Title and description joined, the text every similarity measure sees.
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.description)
    }
}

/// True when `key` has the form `PROJECT-NUMBER` for the given project.
pub fn key_matches_project(key: &str, project_key: &str) -> bool {
    match key.strip_prefix(project_key).and_then(|rest| rest.strip_prefix('-')) {
        Some(num) => !num.is_empty() && num.bytes().all(|b| b.is_ascii_digit()),
        None => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("duplicate commit id {0}")]
    DuplicateCommit(String),
    #[error("duplicate requirement key {0}")]
    DuplicateRequirement(String),
    #[error("requirement key {0} does not match the project prefix")]
    KeyPrefixMismatch(String),
    #[error("commit {0} has an empty file path")]
    EmptyPath(String),
    #[error("requirement {key} references unknown release {release}")]
    UnknownRelease { key: String, release: String },
    #[error("release {0} is listed twice")]
    DuplicateRelease(String),
}

/// Immutable store of commits (ordered by `(timestamp, id)`), requirements
/// (ordered by `(created, key)`) and the optional declared release order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    commits: Vec<Commit>,
    requirements: Vec<Requirement>,
    releases: Option<Vec<String>>,
    project_key: String,
    commit_index: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new(
        project_key: impl Into<String>,
        mut commits: Vec<Commit>,
        mut requirements: Vec<Requirement>,
        releases: Option<Vec<String>>,
    ) -> Result<Self, CorpusError> {
        let project_key = project_key.into();

        let mut seen = BTreeSet::new();
        for c in &commits {
            if !seen.insert(c.id.as_str()) {
                return Err(CorpusError::DuplicateCommit(c.id.clone()));
            }
            if c.file_changes.iter().any(|f| f.path.is_empty()) {
                return Err(CorpusError::EmptyPath(c.id.clone()));
            }
        }
        drop(seen);

        let mut keys = BTreeSet::new();
        for r in &requirements {
            if !key_matches_project(&r.key, &project_key) {
                return Err(CorpusError::KeyPrefixMismatch(r.key.clone()));
            }
            if !keys.insert(r.key.as_str()) {
                return Err(CorpusError::DuplicateRequirement(r.key.clone()));
            }
        }
        drop(keys);

        if let Some(rel) = &releases {
            let mut ids = BTreeSet::new();
            for id in rel {
                if !ids.insert(id.as_str()) {
                    return Err(CorpusError::DuplicateRelease(id.clone()));
                }
            }
            for r in &requirements {
                if let Some(release) = &r.release_id {
                    if !ids.contains(release.as_str()) {
                        return Err(CorpusError::UnknownRelease {
                            key: r.key.clone(),
                            release: release.clone(),
                        });
                    }
                }
            }
        }

        commits.sort_by(|a, b| a.cmp_order(b));
        requirements.sort_by(|a, b| (a.created, &a.key).cmp(&(b.created, &b.key)));
        let commit_index = commits
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();

        Ok(Corpus {
            commits,
            requirements,
            releases,
            project_key,
            commit_index,
        })
    }

    pub fn empty(project_key: impl Into<String>) -> Self {
        Self::new(project_key, Vec::new(), Vec::new(), None).expect("empty corpus is valid")
    }

    pub fn commits(&self) -> &[Commit] {
        &self.commits
    }

    pub fn requirements(&self) -> &[Requirement] {
        &self.requirements
    }

    pub fn releases(&self) -> Option<&[String]> {
        self.releases.as_deref()
    }

    pub fn project_key(&self) -> &str {
        &self.project_key
    }

    /// Position of a commit in the `(timestamp, id)` order.
    pub fn position(&self, commit_id: &str) -> Option<usize> {
        self.commit_index.get(commit_id).copied()
    }

    pub fn commit(&self, commit_id: &str) -> Option<&Commit> {
        self.position(commit_id).map(|i| &self.commits[i])
    }

    pub fn requirement(&self, key: &str) -> Option<&Requirement> {
        self.requirements.iter().find(|r| r.key == key)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub new_feature: usize,
    pub bug: usize,
    pub other: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub commits: usize,
    pub requirements: usize,
    pub requirements_by_kind: KindCounts,
    pub distinct_files: usize,
    pub merge_commits: usize,
    pub warnings: Vec<String>,
}

pub fn validate(corpus: &Corpus) -> ValidationReport {
    let mut report = ValidationReport {
        commits: corpus.commits.len(),
        requirements: corpus.requirements.len(),
        ..ValidationReport::default()
    };
    for r in &corpus.requirements {
        match r.kind {
            RequirementKind::NewFeature => report.requirements_by_kind.new_feature += 1,
            RequirementKind::Bug => report.requirements_by_kind.bug += 1,
            RequirementKind::Other => report.requirements_by_kind.other += 1,
        }
    }
    let files: BTreeSet<&str> = corpus
        .commits
        .iter()
        .flat_map(|c| c.file_changes.iter().map(|f| f.path.as_str()))
        .collect();
    report.distinct_files = files.len();
    report.merge_commits = corpus.commits.iter().filter(|c| c.parent_ids.len() >= 2).count();

    let last = corpus.commits.iter().map(|c| c.timestamp).max();
    for r in &corpus.requirements {
        match last {
            Some(last) if r.created > last => report.warnings.push(format!(
                "requirement {} was created after the last commit",
                r.key
            )),
            None => report.warnings.push(format!(
                "requirement {} has no commits to link against",
                r.key
            )),
            _ => {}
        }
    }
    for c in &corpus.commits {
        for p in &c.parent_ids {
            if corpus.position(p).is_none() {
                report
                    .warnings
                    .push(format!("commit {} has parent {} outside the export", c.id, p));
            }
        }
    }
    report
}
