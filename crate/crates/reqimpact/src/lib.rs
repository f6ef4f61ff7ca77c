//! File formats, configuration and the end-to-end pipeline around
//! `reqimpact-core`.
//!
//! Inputs are line-delimited JSON exports of the commit log and the issue
//! tracker, an optional release list, an optional CSV of externally
//! computed code metrics and optional class source texts. Outputs are the
//! link report, the feature matrix as CSV and ARFF, evaluation reports and
//! statistics, each stamped with the hash of the resolved run config.

pub mod arff;
pub mod config;
pub mod export;
pub mod ingest;
pub mod matcher;
pub mod pipeline;
pub mod reports;
pub mod synth;
pub mod tables;


pub use ingest::IngestError;
pub use matcher::RegexKeyMatcher;
