//! Parsers and writers for `commits.jsonl`, `issues.jsonl` and
//! `releases.txt`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, Utc};
use reqimpact_core::corpus::key_matches_project;
use reqimpact_core::metrics::MetricError;
use reqimpact_core::{ChangeKind, Commit, Corpus, CorpusError, FileChange, Requirement, RequirementKind, Timestamp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{file}:{line}: malformed record: {message}")]
    MalformedRecord { file: String, line: usize, message: String },
    #[error("{file}:{line}: requirement key {key} does not match project {project}")]
    KeyPrefixMismatch { file: String, line: usize, key: String, project: String },
    #[error("{file}:{line}: {source}")]
    Metric { file: String, line: usize, source: MetricError },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl IngestError {
    /// True for failures to read or write files, as opposed to bad content.
    pub fn is_io(&self) -> bool {
        matches!(self, IngestError::Io { .. })
    }
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path).map(BufReader::new).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A timestamp given either as an ISO-8601 string or as epoch seconds.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TimeValue {
    Seconds(i64),
    Text(String),
}

/// Parses ISO-8601 instants to UTC seconds. Accepts RFC 3339, offsets
/// without a colon (`+0000`) and zone-less times, which are read as UTC.
pub fn parse_timestamp(text: &str) -> Option<Timestamp> {
    let text = text.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Some(Timestamp(t.timestamp()));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S %z"] {
        if let Ok(t) = DateTime::parse_from_str(text, fmt) {
            return Some(Timestamp(t.timestamp()));
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(Timestamp(t.and_utc().timestamp()));
        }
    }
    None
}

pub fn format_timestamp(ts: Timestamp) -> String {
    match DateTime::<Utc>::from_timestamp(ts.0, 0) {
        Some(t) => t.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => ts.0.to_string(),
    }
}

fn time_value(v: &TimeValue) -> Option<Timestamp> {
    match v {
        TimeValue::Seconds(s) => Some(Timestamp(*s)),
        TimeValue::Text(t) => parse_timestamp(t),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FileRecord {
    path: String,
    kind: String,
}

#[derive(Debug, Deserialize)]
struct CommitRecord {
    id: String,
    #[serde(default)]
    parents: Vec<String>,
    timestamp: TimeValue,
    #[serde(default)]
    message: String,
    #[serde(default)]
    files: Vec<FileRecord>,
}

#[derive(Serialize)]
struct CommitOut<'a> {
    id: &'a str,
    parents: &'a [String],
    timestamp: String,
    message: &'a str,
    files: Vec<FileRecord>,
}

#[derive(Debug, Deserialize)]
struct IssueRecord {
    key: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    summary: Option<String>,
    #[serde(default)]
    description: Option<String>,
    created: TimeValue,
    #[serde(default, rename = "fixVersion")]
    fix_version: Option<String>,
}

#[derive(Serialize)]
struct IssueOut<'a> {
    key: &'a str,
    #[serde(rename = "type")]
    kind: &'a str,
    summary: &'a str,
    description: &'a str,
    created: String,
    #[serde(rename = "fixVersion")]
    fix_version: Option<&'a str>,
}

fn change_kind(kind: &str) -> Option<ChangeKind> {
    match kind {
        "Added" | "A" | "added" => Some(ChangeKind::Added),
        "Modified" | "M" | "modified" => Some(ChangeKind::Modified),
        "Deleted" | "D" | "deleted" => Some(ChangeKind::Deleted),
        _ => None,
    }
}

fn kind_label(kind: ChangeKind) -> &'static str {
    match kind {
        ChangeKind::Added => "Added",
        ChangeKind::Modified => "Modified",
        ChangeKind::Deleted => "Deleted",
    }
}

/// Non-blank lines with their 1-based line numbers.
pub(crate) fn records<R: BufRead>(reader: R, file: &str) -> impl Iterator<Item = Result<(usize, String), IngestError>> {
    let file = file.to_string();
    reader.lines().enumerate().filter_map(move |(i, line)| match line {
        Ok(l) if l.trim().is_empty() => None,
        Ok(l) => Some(Ok((i + 1, l))),
        Err(e) => Some(Err(IngestError::MalformedRecord {
            file: file.clone(),
            line: i + 1,
            message: e.to_string(),
        })),
    })
}

pub(crate) fn malformed(file: &str, line: usize, message: impl ToString) -> IngestError {
    IngestError::MalformedRecord {
        file: file.to_string(),
        line,
        message: message.to_string(),
    }
}

/// Reads one commit per line. The result is sorted by `(timestamp, id)`.
pub fn parse_commit_log<R: BufRead>(reader: R, file: &str) -> Result<Vec<Commit>, IngestError> {
    let mut commits = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for rec in records(reader, file) {
        let (line, text) = rec?;
        let r: CommitRecord = serde_json::from_str(&text).map_err(|e| malformed(file, line, e))?;
        let timestamp = time_value(&r.timestamp).ok_or_else(|| malformed(file, line, "unparseable timestamp"))?;
        let mut file_changes = Vec::with_capacity(r.files.len());
        for f in r.files {
            let kind = change_kind(&f.kind).ok_or_else(|| malformed(file, line, format!("unknown change kind {:?}", f.kind)))?;
            if f.path.is_empty() {
                return Err(malformed(file, line, "empty file path"));
            }
            file_changes.push(FileChange { path: f.path, kind });
        }
        if !seen.insert(r.id.clone()) {
            return Err(CorpusError::DuplicateCommit(r.id).into());
        }
        commits.push(Commit {
            id: r.id,
            parent_ids: r.parents,
            timestamp,
            message: r.message,
            file_changes,
        });
    }
    commits.sort_by(|a, b| a.cmp_order(b));
    Ok(commits)
}

/// Reads one issue per line, rejecting keys outside `project_key`. The
/// result is sorted by `(created, key)`.
pub fn parse_issues<R: BufRead>(reader: R, file: &str, project_key: &str) -> Result<Vec<Requirement>, IngestError> {
    let mut reqs = Vec::new();
    for rec in records(reader, file) {
        let (line, text) = rec?;
        let r: IssueRecord = serde_json::from_str(&text).map_err(|e| malformed(file, line, e))?;
        if !key_matches_project(&r.key, project_key) {
            return Err(IngestError::KeyPrefixMismatch {
                file: file.to_string(),
                line,
                key: r.key,
                project: project_key.to_string(),
            });
        }
        let created = time_value(&r.created).ok_or_else(|| malformed(file, line, "unparseable created date"))?;
        reqs.push(Requirement {
            key: r.key,
            kind: RequirementKind::from_issue_type(&r.kind),
            title: r.summary.unwrap_or_default(),
            description: r.description.unwrap_or_default(),
            created,
            release_id: r.fix_version.filter(|v| !v.trim().is_empty()),
        });
    }
    reqs.sort_by(|a, b| (a.created, &a.key).cmp(&(b.created, &b.key)));
    Ok(reqs)
}

/// One release id per line; blank lines and `#` comments are skipped.
pub fn parse_releases<R: BufRead>(reader: R, file: &str) -> Result<Vec<String>, IngestError> {
    let mut out = Vec::new();
    for rec in records(reader, file) {
        let (_, text) = rec?;
        let t = text.trim();
        if !t.starts_with('#') {
            out.push(t.to_string());
        }
    }
    Ok(out)
}

pub fn write_commit_log<W: Write>(commits: &[Commit], mut out: W) -> io::Result<()> {
    for c in commits {
        let rec = CommitOut {
            id: &c.id,
            parents: &c.parent_ids,
            timestamp: format_timestamp(c.timestamp),
            message: &c.message,
            files: c
                .file_changes
                .iter()
                .map(|f| FileRecord {
                    path: f.path.clone(),
                    kind: kind_label(f.kind).to_string(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_issues<W: Write>(reqs: &[Requirement], mut out: W) -> io::Result<()> {
    for r in reqs {
        let rec = IssueOut {
            key: &r.key,
            kind: r.kind.label(),
            summary: &r.title,
            description: &r.description,
            created: format_timestamp(r.created),
            fix_version: r.release_id.as_deref(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_releases<W: Write>(releases: &[String], mut out: W) -> io::Result<()> {
    for r in releases {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

fn display_name(path: &Path) -> String {
    path.display().to_string()
}

/// Loads and assembles a corpus from the three input files.
pub fn load_corpus(commits: &Path, issues: &Path, releases: Option<&Path>, project_key: &str) -> Result<Corpus, IngestError> {
    let commit_list = parse_commit_log(open(commits)?, &display_name(commits))?;
    let reqs = parse_issues(open(issues)?, &display_name(issues), project_key)?;
    let rel = match releases {
        Some(p) => Some(parse_releases(open(p)?, &display_name(p))?),
        None => None,
    };
    Ok(Corpus::new(project_key, commit_list, reqs, rel)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_record() {
        let line = r#"{"id":"c1","parents":[],"timestamp":"2020-01-01T00:00:00Z","message":"init","files":[{"path":"a/B.java","kind":"Added"}]}"#;
        let c = parse_commit_log(line.as_bytes(), "commits.jsonl").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].file_changes.len(), 1);
        assert_eq!(c[0].timestamp, Timestamp(1_577_836_800));
    }

    #[test]
    fn duplicate_commit_rejected() {
        let line = r#"{"id":"c1","timestamp":"2020-01-01T00:00:00Z"}"#;
        let input = format!("{line}\n{line}\n");
        assert!(matches!(
            parse_commit_log(input.as_bytes(), "f"),
            Err(IngestError::Corpus(CorpusError::DuplicateCommit(id))) if id == "c1"
        ));
    }

    #[test]
    fn malformed_line_is_named() {
        let input = "{\"id\":\"c1\",\"timestamp\":0}\n\nnot json\n";
        let err = parse_commit_log(input.as_bytes(), "commits.jsonl").unwrap_err();
        assert!(matches!(err, IngestError::MalformedRecord { line: 3, .. }));
        assert!(err.to_string().starts_with("commits.jsonl:3:"));
    }

    #[test]
    fn shuffled_commits_sorted() {
        let input = [
            r#"{"id":"b","timestamp":"2020-01-02T00:00:00Z"}"#,
            r#"{"id":"c","timestamp":"2020-01-01T00:00:00Z"}"#,
            r#"{"id":"a","timestamp":"2020-01-02T00:00:00Z"}"#,
        ]
        .join("\n");
        let ids: Vec<String> = parse_commit_log(input.as_bytes(), "f").unwrap().into_iter().map(|c| c.id).collect();
        assert_eq!(ids, ["c", "a", "b"]);
    }

    #[test]
    fn issue_kinds_and_prefix() {
        let ok = r#"{"key":"TIKA-11","type":"New Feature","summary":"s","description":null,"created":"2012-03-15T10:22:33.000+0000","fixVersion":"1.1"}"#;
        let r = parse_issues(ok.as_bytes(), "issues.jsonl", "TIKA").unwrap();
        assert_eq!(r[0].kind, RequirementKind::NewFeature);
        assert_eq!(r[0].release_id.as_deref(), Some("1.1"));
        let bad = r#"{"key":"OTHER-3","type":"Bug","created":0}"#;
        assert!(matches!(
            parse_issues(bad.as_bytes(), "issues.jsonl", "TIKA"),
            Err(IngestError::KeyPrefixMismatch { line: 1, .. })
        ));
        assert!(parse_issues("".as_bytes(), "f", "TIKA").unwrap().is_empty());
    }

    #[test]
    fn timestamp_forms() {
        let t = Timestamp(1_577_836_800);
        assert_eq!(parse_timestamp("2020-01-01T00:00:00Z"), Some(t));
        assert_eq!(parse_timestamp("2020-01-01T01:00:00+01:00"), Some(t));
        assert_eq!(parse_timestamp("2020-01-01T00:00:00.000+0000"), Some(t));
        assert_eq!(parse_timestamp("2020-01-01 00:00:00"), Some(t));
        assert_eq!(parse_timestamp("yesterday"), None);
        assert_eq!(format_timestamp(t), "2020-01-01T00:00:00Z");
    }

    #[test]
    fn releases_skip_comments() {
        let r = parse_releases("# order\n1.0\n\n1.1\n".as_bytes(), "releases.txt").unwrap();
        assert_eq!(r, ["1.0", "1.1"]);
    }
}
