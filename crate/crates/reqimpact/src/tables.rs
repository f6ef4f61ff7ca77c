//! Loaders for `externals.csv` and `class-texts.jsonl`.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use reqimpact_core::metrics::{ClassTextTable, ExternalMetricsTable, MetricError};
use serde::{Deserialize, Serialize};

use crate::ingest::{malformed, open, records, IngestError};

const EXTERNAL_HEADER: [&str; 4] = ["release_id", "class_path", "metric", "value"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalsLoad {
    pub table: ExternalMetricsTable,
    pub rows: usize,
    pub warnings: Vec<String>,
}

/// Reads `release_id,class_path,metric,value` rows. A repeated key keeps
/// the last value and records a warning.
pub fn parse_externals<R: Read>(reader: R, file: &str) -> Result<ExternalsLoad, IngestError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let header = csv.headers().map_err(|e| malformed(file, 1, e))?.clone();
    if header.iter().collect::<Vec<_>>() != EXTERNAL_HEADER {
        return Err(malformed(file, 1, format!("expected header {}", EXTERNAL_HEADER.join(","))));
    }
    let mut out = ExternalsLoad::default();
    for rec in csv.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            malformed(file, line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let (release, class, metric, raw) = (&rec[0], &rec[1], &rec[2], &rec[3]);
        let value: f64 = raw.parse().map_err(|_| IngestError::Metric {
            file: file.to_string(),
            line,
            source: MetricError::NonNumericValue {
                metric: metric.to_string(),
                value: raw.to_string(),
            },
        })?;
        let replaced = out.table.insert(release, class, metric, value).map_err(|source| IngestError::Metric {
            file: file.to_string(),
            line,
            source,
        })?;
        if replaced {
            out.warnings.push(format!("{file}:{line}: duplicate {metric} for {class} in release {release:?}; last value kept"));
        }
        out.rows += 1;
    }
    Ok(out)
}

pub fn load_externals(path: &Path) -> Result<ExternalsLoad, IngestError> {
    parse_externals(open(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTextRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub release_id: Option<String>,
    pub path: String,
    pub text: String,
}

/// Reads `{"release_id"?, "path", "text"}` lines.
pub fn parse_class_texts<R: BufRead>(reader: R, file: &str) -> Result<ClassTextTable, IngestError> {
    let mut table = ClassTextTable::default();
    for rec in records(reader, file) {
        let (line, text) = rec?;
        let r: ClassTextRecord = serde_json::from_str(&text).map_err(|e| malformed(file, line, e))?;
        table.insert(r.release_id.as_deref(), &r.path, r.text);
    }
    Ok(table)
}

pub fn load_class_texts(path: &Path) -> Result<ClassTextTable, IngestError> {
    parse_class_texts(open(path)?, &path.display().to_string())
}

pub fn write_class_texts<W: Write>(records: &[ClassTextRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
