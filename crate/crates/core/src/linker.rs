//! Links requirements to the commits whose messages carry their key, and
//! derives the touched/untouched class sets and release boundaries.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ChangeKind, Corpus, Requirement, Timestamp};

/// Template for the commit-message pattern; `{KEY}` is replaced by the
/// project key.
pub const DEFAULT_REGEX_TEMPLATE: &str = ".*{KEY}-([0-9]+).*";

/// Boundary marker used when a release starts at the repository root.
pub const PRE_HISTORY: &str = "^pre-history";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub project_key: String,
    pub regex_template: String,
    pub class_extensions: Vec<String>,
}

impl LinkConfig {
    pub fn new(project_key: impl Into<String>) -> Self {
        LinkConfig {
            project_key: project_key.into(),
            regex_template: DEFAULT_REGEX_TEMPLATE.to_string(),
            class_extensions: alloc::vec![".java".to_string()],
        }
    }

    /// The pattern for this project, e.g. `.*TIKA-([0-9]+).*`.
    pub fn instantiated_pattern(&self) -> String {
        self.regex_template.replace("{KEY}", &self.project_key)
    }

    pub fn is_class(&self, path: &str) -> bool {
        self.class_extensions.iter().any(|ext| path.ends_with(ext.as_str()))
    }
}

/// Extracts every requirement key referenced by a commit message, in order
/// of appearance. Duplicates are allowed; callers dedupe.
pub trait KeyMatcher {
    fn requirement_keys(&self, message: &str) -> Vec<String>;
}

/// Literal scanner equivalent to the default template: finds every
/// non-overlapping `KEY-<digits>` occurrence, case-sensitive.
#[derive(Debug, Clone)]
pub struct KeyScanner {
    prefix: String,
    project_key: String,
}

impl KeyScanner {
    pub fn new(project_key: &str) -> Self {
        KeyScanner {
            prefix: format!("{project_key}-"),
            project_key: project_key.to_string(),
        }
    }
}

impl KeyMatcher for KeyScanner {
    fn requirement_keys(&self, message: &str) -> Vec<String> {
        let mut out = Vec::new();
        let bytes = message.as_bytes();
        let mut from = 0;
        while let Some(off) = message[from..].find(self.prefix.as_str()) {
            let start = from + off;
            let digits_start = start + self.prefix.len();
            let mut end = digits_start;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end > digits_start {
                out.push(format!("{}-{}", self.project_key, &message[digits_start..end]));
                from = end;
            } else {
                // Step one char past the match start.
                from = start + message[start..].chars().next().map_or(1, char::len_utf8);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementChange {
    pub requirement: Requirement,
    /// Linked commit ids in `(timestamp, id)` order.
    pub linked_commits: Vec<String>,
    pub touched_files: BTreeSet<String>,
    pub untouched_files: BTreeSet<String>,
    pub first_commit_id: String,
}

impl RequirementChange {
    /// Every candidate class for this requirement: touched plus untouched.
    pub fn candidates(&self) -> impl Iterator<Item = &String> {
        self.touched_files.iter().chain(self.untouched_files.iter())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkOutcome {
    /// Linked requirements in implementation order: first linked commit
    /// position, then requirement key.
    pub changes: Vec<RequirementChange>,
    /// Keys of requirements no commit refers to.
    pub unlinked: Vec<String>,
    /// Commits that reference at least one known requirement.
    pub linked_commit_count: usize,
    /// `(commit id, key)` pairs naming a requirement absent from the corpus.
    pub dangling_references: Vec<(String, String)>,
}

impl LinkOutcome {
    pub fn change(&self, key: &str) -> Option<&RequirementChange> {
        self.changes.iter().find(|c| c.requirement.key == key)
    }
}

pub fn link(corpus: &Corpus, config: &LinkConfig, matcher: &dyn KeyMatcher) -> LinkOutcome {
    let known: BTreeSet<&str> = corpus.requirements().iter().map(|r| r.key.as_str()).collect();
    let mut by_key: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut outcome = LinkOutcome::default();

    for (pos, commit) in corpus.commits().iter().enumerate() {
        let mut keys = matcher.requirement_keys(&commit.message);
        keys.sort();
        keys.dedup();
        let mut linked_any = false;
        for key in keys {
            match known.get(key.as_str()) {
                Some(k) => {
                    by_key.entry(k).or_default().push(pos);
                    linked_any = true;
                }
                None => outcome.dangling_references.push((commit.id.clone(), key)),
            }
        }
        if linked_any {
            outcome.linked_commit_count += 1;
        }
    }

    let mut pending: Vec<(usize, &Requirement, Vec<usize>)> = Vec::new();
    for req in corpus.requirements() {
        match by_key.remove(req.key.as_str()) {
            Some(positions) => pending.push((positions[0], req, positions)),
            None => outcome.unlinked.push(req.key.clone()),
        }
    }
    pending.sort_by(|a, b| (a.0, &a.1.key).cmp(&(b.0, &b.1.key)));

    let mut replay = FileReplay::new(corpus, config);
    for (first, req, positions) in pending {
        let linked_commits: Vec<String> = positions
            .iter()
            .map(|&p| corpus.commits()[p].id.clone())
            .collect();
        let touched = touched_files(corpus, config, &linked_commits);
        replay.advance_through(first);
        let untouched = replay.untouched(req.created, &touched);
        outcome.changes.push(RequirementChange {
            requirement: req.clone(),
            first_commit_id: linked_commits[0].clone(),
            linked_commits,
            touched_files: touched,
            untouched_files: untouched,
        });
    }
    outcome.unlinked.sort();
    outcome
}

/// Union of class paths changed by the given commits.
pub fn touched_files(corpus: &Corpus, config: &LinkConfig, linked_commits: &[String]) -> BTreeSet<String> {
    linked_commits
        .iter()
        .filter_map(|id| corpus.commit(id))
        .flat_map(|c| c.file_changes.iter())
        .filter(|f| config.is_class(&f.path))
        .map(|f| f.path.clone())
        .collect()
}

/// Classes present when the requirement's first commit is checked out,
/// excluding ones first seen after the requirement was created and the
/// ones it touched.
pub fn untouched_files(corpus: &Corpus, config: &LinkConfig, change: &RequirementChange) -> BTreeSet<String> {
    let mut replay = FileReplay::new(corpus, config);
    if let Some(pos) = corpus.position(&change.first_commit_id) {
        replay.advance_through(pos);
    }
    replay.untouched(change.requirement.created, &change.touched_files)
}

/// Forward replay of Added/Modified/Deleted events over the commit order.
/// A `Modified` event on an unseen path counts as evidence the file exists.
pub struct FileReplay<'a> {
    corpus: &'a Corpus,
    config: &'a LinkConfig,
    next: usize,
    live: BTreeSet<String>,
    first_seen: BTreeMap<String, Timestamp>,
}

impl<'a> FileReplay<'a> {
    pub fn new(corpus: &'a Corpus, config: &'a LinkConfig) -> Self {
        FileReplay {
            corpus,
            config,
            next: 0,
            live: BTreeSet::new(),
            first_seen: BTreeMap::new(),
        }
    }

    /// Applies every commit up to and including position `pos`.
    pub fn advance_through(&mut self, pos: usize) {
        let commits = self.corpus.commits();
        while self.next <= pos && self.next < commits.len() {
            let c = &commits[self.next];
            for f in c.file_changes.iter().filter(|f| self.config.is_class(&f.path)) {
                self.first_seen.entry(f.path.clone()).or_insert(c.timestamp);
                match f.kind {
                    ChangeKind::Added | ChangeKind::Modified => {
                        self.live.insert(f.path.clone());
                    }
                    ChangeKind::Deleted => {
                        self.live.remove(&f.path);
                    }
                }
            }
            self.next += 1;
        }
    }

    pub fn live(&self) -> &BTreeSet<String> {
        &self.live
    }

    pub fn untouched(&self, created: Timestamp, touched: &BTreeSet<String>) -> BTreeSet<String> {
        self.live
            .iter()
            .filter(|p| self.first_seen.get(*p).is_some_and(|&t| t <= created))
            .filter(|p| !touched.contains(*p))
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseBoundary {
    pub release_id: String,
    pub boundary_commit_id: String,
}

impl ReleaseBoundary {
    pub fn is_pre_history(&self) -> bool {
        self.boundary_commit_id == PRE_HISTORY
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryOutcome {
    pub boundaries: Vec<ReleaseBoundary>,
    pub warnings: Vec<String>,
}

impl BoundaryOutcome {
    pub fn for_release(&self, release_id: &str) -> Option<&ReleaseBoundary> {
        self.boundaries.iter().find(|b| b.release_id == release_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("commit {0} has no parent but is not the repository root")]
    OrphanCommit(String),
}

/// Per release, the parent of the earliest first-linked commit among the
/// release's requirements.
pub fn release_boundaries(corpus: &Corpus, changes: &[RequirementChange]) -> Result<BoundaryOutcome, LinkError> {
    let mut earliest: BTreeMap<&str, usize> = BTreeMap::new();
    for change in changes {
        let Some(release) = change.requirement.release_id.as_deref() else { continue };
        let Some(pos) = corpus.position(&change.first_commit_id) else { continue };
        earliest
            .entry(release)
            .and_modify(|p| *p = (*p).min(pos))
            .or_insert(pos);
    }

    let order: Vec<String> = match corpus.releases() {
        Some(declared) => declared.to_vec(),
        None => {
            let mut ids: Vec<(&usize, &&str)> = earliest.iter().map(|(k, v)| (v, k)).collect();
            ids.sort();
            ids.into_iter().map(|(_, k)| k.to_string()).collect()
        }
    };

    let mut outcome = BoundaryOutcome::default();
    for release in order {
        let Some(&pos) = earliest.get(release.as_str()) else {
            outcome
                .warnings
                .push(format!("release {release} has no linked requirement; omitted"));
            continue;
        };
        let commit = &corpus.commits()[pos];
        let boundary = match commit.parent_ids.first() {
            Some(parent) => parent.clone(),
            None if pos == 0 => PRE_HISTORY.to_string(),
            None => return Err(LinkError::OrphanCommit(commit.id.clone())),
        };
        outcome.boundaries.push(ReleaseBoundary {
            release_id: release,
            boundary_commit_id: boundary,
        });
    }
    Ok(outcome)
}
