//! Rate-profile and weight files, transit logs.
//!
//! A list of rates is either a JSON array of positive numbers or a CSV file
//! with one number per line. The CSV form may start with a single header
//! line. Values are written with the shortest representation that parses
//! back to the same `f64`.

use std::fmt;
use std::fs;
use std::path::Path;

use rfmnet_core::tasep::TransitRecord;
use rfmnet_core::RateProfile;
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

use crate::error::CliError;

/// On-disk layout of a list of numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ListFormat {
    Json,
    Csv,
}

impl ListFormat {
    /// `.csv` selects CSV, anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ListFormat::Csv,
            _ => ListFormat::Json,
        }
    }
}

struct PositiveNumber(f64);

impl<'de> Deserialize<'de> for PositiveNumber {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = PositiveNumber;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive finite number")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<PositiveNumber, E> {
                if v > 0.0 && v.is_finite() {
                    Ok(PositiveNumber(v))
                } else {
                    Err(E::custom(format_args!(
                        "expected a positive finite number, got {v}"
                    )))
                }
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<PositiveNumber, E> {
                self.visit_f64(v as f64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<PositiveNumber, E> {
                self.visit_f64(v as f64)
            }
        }
        d.deserialize_any(V)
    }
}

/// Parses a list of positive numbers. `origin` names the source in errors.
pub fn parse_positive_list(
    text: &str,
    format: ListFormat,
    origin: &Path,
) -> Result<Vec<f64>, CliError> {
    let parse_err = |line: u64, msg: String| CliError::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let values = match format {
        ListFormat::Json => {
            let list: Vec<PositiveNumber> = serde_json::from_str(text)
                .map_err(|e| parse_err(e.line() as u64, e.to_string()))?;
            list.into_iter().map(|p| p.0).collect()
        }
        ListFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .trim(csv::Trim::All)
                .comment(Some(b'#'))
                .flexible(true)
                .from_reader(text.as_bytes());
            let mut values = Vec::new();
            for (k, record) in reader.records().enumerate() {
                let record = record.map_err(|e| {
                    let line = e.position().map_or(0, |p| p.line());
                    parse_err(line, e.to_string())
                })?;
                let line = record.position().map_or(0, |p| p.line());
                if record.len() != 1 {
                    return Err(parse_err(
                        line,
                        format!("expected one column, found {}", record.len()),
                    ));
                }
                let field = &record[0];
                match field.parse::<f64>() {
                    Ok(v) if v > 0.0 && v.is_finite() => values.push(v),
                    Ok(v) => {
                        return Err(parse_err(
                            line,
                            format!("expected a positive finite number, got {v}"),
                        ))
                    }
                    // a non-numeric first row is a header
                    Err(_) if k == 0 => {}
                    Err(_) => {
                        return Err(parse_err(line, format!("not a number: {field:?}")));
                    }
                }
            }
            values
        }
    };
    if values.is_empty() {
        return Err(parse_err(1, "no values".into()));
    }
    Ok(values)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn sniff(path: &Path, text: &str) -> ListFormat {
    let json_ext = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if json_ext || text.trim_start().starts_with('[') {
        ListFormat::Json
    } else {
        ListFormat::Csv
    }
}

/// Reads `λ₀, …, λₙ` from a JSON or CSV file.
pub fn read_rates(path: &Path) -> Result<RateProfile, CliError> {
    let text = read_text(path)?;
    let values = parse_positive_list(&text, sniff(path, &text), path)?;
    Ok(RateProfile::new(values)?)
}

/// Reads a list of positive weights in the same formats as [`read_rates`].
pub fn read_positive_list(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = read_text(path)?;
    parse_positive_list(&text, sniff(path, &text), path)
}

/// Renders a list in the given layout. CSV gets a `rate` header.
pub fn format_list(values: &[f64], format: ListFormat) -> String {
    match format {
        ListFormat::Json => {
            let mut s = serde_json::to_string_pretty(values).expect("finite floats serialize");
            s.push('\n');
            s
        }
        ListFormat::Csv => {
            let mut s = String::from("rate\n");
            for v in values {
                s.push_str(&format!("{v:?}\n"));
            }
            s
        }
    }
}

/// Writes a rate profile, choosing the layout from the file extension.
pub fn write_rates(path: &Path, rates: &RateProfile) -> Result<(), CliError> {
    let text = format_list(rates.as_slice(), ListFormat::from_path(path));
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `packet_id,entry_time,exit_time` rows.
pub fn write_transits(path: &Path, transits: &[TransitRecord]) -> Result<(), CliError> {
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        other => CliError::Usage(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(["packet_id", "entry_time", "exit_time"])
        .map_err(io_err)?;
    for t in transits {
        w.write_record([
            t.packet_id.to_string(),
            format!("{:?}", t.entry_time),
            format!("{:?}", t.exit_time),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, format: ListFormat) -> Result<Vec<f64>, CliError> {
        parse_positive_list(text, format, Path::new("t"))
    }

    fn line_of(e: CliError) -> u64 {
        match e {
            CliError::Parse { line, .. } => line,
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn json_array() {
        assert_eq!(
            parse("[1, 2.5, 3e-1]", ListFormat::Json).unwrap(),
            vec![1.0, 2.5, 0.3]
        );
    }

    #[test]
    fn json_rejects_nonpositive_with_line() {
        let e = parse("[\n 1.0,\n 2.0,\n -3.0\n]", ListFormat::Json).unwrap_err();
        assert_eq!(line_of(e), 4);
        let e = parse("[\n 1.0,\n 0\n]", ListFormat::Json).unwrap_err();
        assert_eq!(line_of(e), 3);
    }

    #[test]
    fn json_rejects_non_numbers() {
        let e = parse("[1.0,\n\"x\"]", ListFormat::Json).unwrap_err();
        assert_eq!(line_of(e), 2);
        assert!(parse("{\"a\": 1}", ListFormat::Json).is_err());
        assert!(parse("[]", ListFormat::Json).is_err());
    }

    #[test]
    fn csv_with_and_without_header() {
        assert_eq!(
            parse("1\n2\n3\n", ListFormat::Csv).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            parse("rate\n1\n 2 \n", ListFormat::Csv).unwrap(),
            vec![1.0, 2.0]
        );
    }

    #[test]
    fn csv_errors_carry_lines() {
        assert_eq!(
            line_of(parse("rate\n1\n-2\n", ListFormat::Csv).unwrap_err()),
            3
        );
        assert_eq!(
            line_of(parse("1\n2\nabc\n", ListFormat::Csv).unwrap_err()),
            3
        );
        assert_eq!(line_of(parse("1\n2,3\n", ListFormat::Csv).unwrap_err()), 2);
        assert_eq!(line_of(parse("1\ninf\n", ListFormat::Csv).unwrap_err()), 2);
    }

    #[test]
    fn written_lists_parse_back_exactly() {
        let values = vec![0.1, 1.0 / 3.0, 2.0_f64.sqrt(), 1e-300, 7.0];
        for format in [ListFormat::Json, ListFormat::Csv] {
            let text = format_list(&values, format);
            assert_eq!(parse(&text, format).unwrap(), values);
        }
    }
}
