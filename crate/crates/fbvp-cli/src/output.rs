//! Artifact writers with a fixed, deterministic float format: 17 significant
//! digits, lowercase scientific notation (`{:.16e}`). Identical inputs
//! produce byte-identical files. CSV files use a header row, comma
//! separators, `\n` line endings, UTF-8.

use std::fmt::Write as _;
use std::path::Path;

/// `{:.16e}` keeps 17 significant digits, enough to round-trip every f64.
/// Non-finite values print as `nan`/`inf`/`-inf` in CSV (a residual is
/// genuinely undefined at a singular endpoint) and as `null` in JSON.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_json_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

/// Quote a CSV field when it contains a delimiter, quote, or newline
/// (RFC 4180).
fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn json_escape(field: &str) -> String {
    field.replace('\\', "\\\\").replace('"', "\\\"")
}

/// A rectangular table of floats with named columns, plus an optional
/// leading text column (named, one entry per row).
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<(&'static str, Vec<String>)>,
}

impl Table {
    pub fn numeric(columns: Vec<&'static str>, rows: Vec<Vec<f64>>) -> Self {
        Table {
            columns,
            rows,
            labels: None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some((name, _)) = &self.labels {
            out.push_str(name);
            out.push(',');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            debug_assert_eq!(row.len(), self.columns.len());
            if let Some((_, labels)) = &self.labels {
                out.push_str(&csv_escape(&labels[i]));
                out.push(',');
            }
            let cells: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Hand-rendered JSON so numbers keep the same 17-significant-digit
    /// scientific form as the CSV (still valid JSON numbers).
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n  \"columns\": [");
        let mut first = true;
        if let Some((name, _)) = &self.labels {
            let _ = write!(out, "\"{}\"", json_escape(name));
            first = false;
        }
        for c in &self.columns {
            if !first {
                out.push_str(", ");
            }
            first = false;
            let _ = write!(out, "\"{c}\"");
        }
        out.push_str("],\n  \"rows\": [\n");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str("    [");
            let mut first_cell = true;
            if let Some((_, labels)) = &self.labels {
                let _ = write!(out, "\"{}\"", json_escape(&labels[i]));
                first_cell = false;
            }
            for &v in row.iter() {
                if !first_cell {
                    out.push_str(", ");
                }
                first_cell = false;
                out.push_str(&fmt_json_number(v));
            }
            out.push(']');
            if i + 1 < self.rows.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("  ]\n}\n");
        out
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents.as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_17_significant_lowercase() {
        let e = fmt_float(std::f64::consts::E);
        assert!(e.starts_with("2.718281828459045"), "{e}");
        assert!(e.ends_with("e0"), "{e}");
        assert_eq!(e.len(), "2.".len() + 16 + "e0".len());
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_float(f64::NAN), "nan");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        // Round-trips exactly, including tiny magnitudes.
        for v in [0.1234567890123456789_f64, -1.5e-300, 7.0 / 3.0] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_shape() {
        let table = Table::numeric(vec!["t", "x"], vec![vec![0.0, 1.0], vec![0.5, f64::NAN]]);
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x"));
        assert_eq!(
            lines.next(),
            Some("0.0000000000000000e0,1.0000000000000000e0")
        );
        assert_eq!(lines.next(), Some("5.0000000000000000e-1,nan"));
        assert!(csv.ends_with('\n'));
    }

    #[test]
    fn json_is_parseable_and_preserves_digits() {
        let mut table = Table::numeric(vec!["a"], vec![vec![std::f64::consts::E], vec![f64::NAN]]);
        table.labels = Some(("name", vec!["first, comma".into(), "second".into()]));
        let json = table.to_json();
        let parsed: serde_json::Value = serde_json::from_str(&json).expect("valid JSON");
        let e_str = fmt_float(std::f64::consts::E);
        assert_eq!(parsed["rows"][0][0].as_str(), Some("first, comma"));
        assert_eq!(parsed["rows"][0][1].as_f64(), Some(std::f64::consts::E));
        assert!(parsed["rows"][1][1].is_null());
        assert!(json.contains(&e_str), "{json}");

        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("name,a"));
        assert_eq!(lines.next().unwrap(), format!("\"first, comma\",{e_str}"));
        assert_eq!(lines.next(), Some("second,nan"));
    }
}
