//! Requirement-to-class change impact prediction.
//!
//! This crate holds the pure algorithmic side of the toolchain: corpus
//! types, commit linking, text similarity, the per-pair metric families,
//! feature-matrix assembly, the learners with their evaluation protocol,
//! and the hypothesis tests used to compare runs. It is `no_std` and only
//! needs `alloc`; parsing, file formats and the CLI live in the
//! `reqimpact` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod dataset;
pub mod learn;
pub mod linker;
pub mod metrics;
pub mod stats;
pub mod textsim;

mod num;

pub use corpus::{ChangeKind, Commit, Corpus, CorpusError, FileChange, Requirement, RequirementKind, Timestamp};
pub use dataset::{FeatureMatrix, FeatureRow};
pub use linker::{LinkConfig, LinkOutcome, RequirementChange};
pub use metrics::Metric;
