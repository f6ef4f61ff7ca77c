use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, RequirementKind};
use crate::linker::{LinkConfig, RequirementChange};

/// Maximum size of a class's requirements set.
pub const REQUIREMENTS_SET_CAP: usize = 10;

/// Which linked requirements feed class histories and requirements sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HistoryPolicy {
    /// Every linked issue, whatever its kind.
    #[default]
    AllLinked,
    /// Only new-feature requirements.
    FeaturesOnly,
}

impl HistoryPolicy {
    fn admits(self, kind: RequirementKind) -> bool {
        match self {
            HistoryPolicy::AllLinked => true,
            HistoryPolicy::FeaturesOnly => kind == RequirementKind::NewFeature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHistory {
    pub class_path: String,
    /// `T(i)` for the prior requirements, oldest first.
    pub touch_flags: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementsSet {
    pub class_path: String,
    /// Requirement keys, most recent last.
    pub members: Vec<String>,
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    kind: RequirementKind,
    first_pos: usize,
    /// `(commit position, class paths it changed)` in commit order.
    commits: Vec<(usize, Vec<String>)>,
}

/// Linked requirements in implementation order with their per-commit
/// class touches, ready to be cut at any commit position.
#[derive(Debug, Clone)]
pub struct HistoryIndex {
    entries: Vec<Entry>,
}

impl HistoryIndex {
    pub fn new(corpus: &Corpus, changes: &[RequirementChange], config: &LinkConfig) -> Self {
        let mut entries: Vec<Entry> = changes
            .iter()
            .filter_map(|change| {
                let commits: Vec<(usize, Vec<String>)> = change
                    .linked_commits
                    .iter()
                    .filter_map(|id| corpus.position(id))
                    .map(|pos| {
                        let classes = corpus.commits()[pos]
                            .file_changes
                            .iter()
                            .filter(|f| config.is_class(&f.path))
                            .map(|f| f.path.clone())
                            .collect();
                        (pos, classes)
                    })
                    .collect();
                let first_pos = commits.iter().map(|(p, _)| *p).min()?;
                Some(Entry {
                    key: change.requirement.key.clone(),
                    kind: change.requirement.kind,
                    first_pos,
                    commits,
                })
            })
            .collect();
        entries.sort_by(|a, b| (a.first_pos, &a.key).cmp(&(b.first_pos, &b.key)));
        HistoryIndex { entries }
    }

    /// Requirements whose first linked commit lies strictly before `cutoff`
    /// with the classes their commits before `cutoff` touched.
    pub fn snapshot(&self, cutoff: usize, policy: HistoryPolicy) -> HistorySnapshot {
        let members = self
            .entries
            .iter()
            .filter(|e| e.first_pos < cutoff && policy.admits(e.kind))
            .map(|e| {
                let used: Vec<&(usize, Vec<String>)> = e.commits.iter().filter(|(p, _)| *p < cutoff).collect();
                SnapshotMember {
                    key: e.key.clone(),
                    first_pos: e.first_pos,
                    latest_pos: used.iter().map(|(p, _)| *p).max(),
                    touched: used.iter().flat_map(|(_, c)| c.iter().cloned()).collect(),
                }
            })
            .collect();
        HistorySnapshot { members }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotMember {
    pub key: String,
    pub first_pos: usize,
    /// Latest commit position whose changes were read.
    pub latest_pos: Option<usize>,
    pub touched: BTreeSet<String>,
}

/// The requirement sequence visible from one cutoff.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HistorySnapshot {
    members: Vec<SnapshotMember>,
}

impl HistorySnapshot {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[SnapshotMember] {
        &self.members
    }

    pub fn class_history(&self, class_path: &str) -> ClassHistory {
        ClassHistory {
            class_path: String::from(class_path),
            touch_flags: self.members.iter().map(|m| m.touched.contains(class_path)).collect(),
        }
    }

    pub fn requirements_set(&self, class_path: &str, cap: usize) -> RequirementsSet {
        let touching: Vec<&SnapshotMember> = self
            .members
            .iter()
            .filter(|m| m.touched.contains(class_path))
            .collect();
        let skip = touching.len().saturating_sub(cap);
        RequirementsSet {
            class_path: String::from(class_path),
            members: touching[skip..].iter().map(|m| m.key.clone()).collect(),
        }
    }

    /// Latest commit position any member's data came from.
    pub fn latest_input_position(&self) -> Option<usize> {
        self.members
            .iter()
            .flat_map(|m| m.latest_pos.into_iter().chain(core::iter::once(m.first_pos)))
            .max()
    }
}
