//! CSV and ARFF serialisation of feature matrices.
//!
//! Numbers use Rust's shortest round-trip decimal form, so a matrix read
//! back from CSV is bit-identical to the one written.

use std::io::{self, Read, Write};

use reqimpact_core::{FeatureMatrix, FeatureRow};
use thiserror::Error;

const ID_COLUMNS: [&str; 3] = ["requirement_key", "class_path", "sequence"];
const LABEL_COLUMN: &str = "impacted";

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Shortest text that parses back to the same bits; exponent form for
/// magnitudes outside `[1e-6, 1e15)`. Missing values are empty.
pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(x) if x != 0.0 && x.is_finite() && !(1e-6..1e15).contains(&x.abs()) => format!("{x:e}"),
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

fn label(impacted: bool) -> &'static str {
    if impacted {
        "yes"
    } else {
        "no"
    }
}

/// Writes a header row then one row per matrix row. A leading
/// `# config_hash <hex>` comment is written when `config_hash` is given.
pub fn write_csv<W: Write>(matrix: &FeatureMatrix, config_hash: Option<&str>, mut out: W) -> Result<(), ExportError> {
    if let Some(h) = config_hash {
        writeln!(out, "# config_hash {h}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = ID_COLUMNS
        .iter()
        .copied()
        .chain(matrix.features.iter().map(String::as_str))
        .chain([LABEL_COLUMN])
        .collect();
    w.write_record(&header)?;
    for r in &matrix.rows {
        let mut rec = vec![r.requirement_key.clone(), r.class_path.clone(), r.sequence.to_string()];
        rec.extend(r.values.iter().map(|v| format_value(*v)));
        rec.push(label(r.impacted).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<FeatureMatrix, ExportError> {
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let header = csv.headers()?.clone();
    let n = header.len();
    let bad = |line: usize, message: String| ExportError::Format { line, message };
    if n < ID_COLUMNS.len() + 1 || header.iter().take(3).ne(ID_COLUMNS) || &header[n - 1] != LABEL_COLUMN {
        return Err(bad(1, "unexpected header".into()));
    }
    let features: Vec<String> = header.iter().skip(3).take(n - 4).map(String::from).collect();
    let mut rows = Vec::new();
    for rec in csv.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let sequence = rec[2].parse().map_err(|_| bad(line, format!("bad sequence {:?}", &rec[2])))?;
        let values = (3..n - 1)
            .map(|i| match &rec[i] {
                "" | "?" => Ok(None),
                s => s.parse::<f64>().map(Some).map_err(|_| bad(line, format!("bad number {s:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let impacted = match &rec[n - 1] {
            "yes" => true,
            "no" => false,
            other => return Err(bad(line, format!("bad label {other:?}"))),
        };
        rows.push(FeatureRow {
            requirement_key: rec[0].to_string(),
            class_path: rec[1].to_string(),
            sequence,
            values,
            impacted,
        });
    }
    Ok(FeatureMatrix { features, rows })
}

/// Quotes an ARFF name when it holds anything but plain identifier chars.
fn arff_name(name: &str) -> String {
    if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')) {
        name.to_string()
    } else {
        format!("'{}'", name.replace('\\', "\\\\").replace('\'', "\\'"))
    }
}

/// Features as NUMERIC attributes plus a `class {yes,no}` attribute;
/// missing values are `?`. Row identity is carried in the CSV only.
pub fn write_arff<W: Write>(matrix: &FeatureMatrix, comments: &[String], mut out: W) -> io::Result<()> {
    for c in comments {
        writeln!(out, "% {c}")?;
    }
    writeln!(out, "@RELATION impact")?;
    writeln!(out)?;
    for f in &matrix.features {
        writeln!(out, "@ATTRIBUTE {} NUMERIC", arff_name(f))?;
    }
    writeln!(out, "@ATTRIBUTE class {{yes,no}}")?;
    writeln!(out)?;
    writeln!(out, "@DATA")?;
    for r in &matrix.rows {
        let mut line: Vec<String> = r.values.iter().map(|v| v.map_or_else(|| "?".to_string(), |x| format!("{x}"))).collect();
        line.push(label(r.impacted).to_string());
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureMatrix {
        FeatureMatrix {
            features: vec!["R2RS_VSM_Max".into(), "CKJM_WMC".into()],
            rows: vec![
                FeatureRow {
                    requirement_key: "P-1".into(),
                    class_path: "a/B.java".into(),
                    sequence: 3,
                    values: vec![Some(0.1 + 0.2), None],
                    impacted: true,
                },
                FeatureRow {
                    requirement_key: "P-1".into(),
                    class_path: "a/C, d.java".into(),
                    sequence: 3,
                    values: vec![Some(1e-300), Some(7.0)],
                    impacted: false,
                },
            ],
        }
    }

    #[test]
    fn csv_round_trip() {
        let m = sample();
        let mut buf = Vec::new();
        write_csv(&m, Some("abc"), &mut buf).unwrap();
        assert!(buf.starts_with(b"# config_hash abc\nrequirement_key,"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn arff_marks_missing() {
        let m = sample();
        let mut buf = Vec::new();
        write_arff(&m, &[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("0.30000000000000004,?,yes\n"));
        assert!(text.contains("@ATTRIBUTE class {yes,no}"));
    }

    #[test]
    fn names_with_spaces_are_quoted() {
        assert_eq!(arff_name("R2RS_VSM_Max"), "R2RS_VSM_Max");
        assert_eq!(arff_name("a b"), "'a b'");
        assert_eq!(arff_name("it's"), "'it\\'s'");
    }

    #[test]
    fn small_values_use_exponent_form() {
        assert_eq!(format_value(Some(3.3306690738754696e-16)), "3.3306690738754696e-16");
        assert_eq!(format_value(Some(0.25)), "0.25");
        assert_eq!(format_value(Some(-0.0)), "-0");
        assert_eq!(format_value(None), "");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(1000))]
        #[test]
        fn formatted_values_parse_back_bit_exact(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let text = format_value(Some(x));
            proptest::prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
