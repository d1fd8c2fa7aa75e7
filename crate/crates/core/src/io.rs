//! Plain-text CSV helpers shared by the serializers.

use crate::{Error, Result};

/// Round-trip exact float formatting (17 significant digits).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a CSV body: `#` lines are skipped, the first remaining line must be
/// the header `columns`, every following non-empty line must have the same
/// number of fields. Returns `(line number, fields)` pairs.
pub fn parse_csv_rows(text: &str, columns: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if !header_seen {
            if fields != columns {
                return Err(Error::Parse(format!(
                    "line {}: expected header '{}', found '{line}'",
                    idx + 1,
                    columns.join(",")
                )));
            }
            header_seen = true;
            continue;
        }
        if fields.len() != columns.len() {
            return Err(Error::Parse(format!(
                "line {}: expected {} fields, found {}",
                idx + 1,
                columns.len(),
                fields.len()
            )));
        }
        rows.push((idx + 1, fields));
    }
    if !header_seen {
        return Err(Error::Parse("missing CSV header".into()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.0, 1.0 / 3.0, -2.5e-300, 0.1 + 0.2, f64::MAX, 5e-324] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(0.125), "1.2500000000000000e-1");
    }

    #[test]
    fn rows_and_errors() {
        let rows = parse_csv_rows("# c\nz,v\n1,2\n\n3,4\n", &["z", "v"]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].0, 5);
        assert!(parse_csv_rows("a,b\n", &["z", "v"]).is_err());
        assert!(parse_csv_rows("z,v\n1\n", &["z", "v"]).is_err());
        assert!(parse_csv_rows("# only\n", &["z"]).is_err());
    }
}
