//! Header-annotated, whitespace-delimited numeric tables.
//!
//! Lines starting with `#` are comments. Every data row must have the same
//! number of columns.

use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_table(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|e| Error::Table {
                    line: i + 1,
                    reason: format!("`{s}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Table {
                    line: i + 1,
                    reason: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Table {
                line: i + 1,
                reason: "non-finite value".into(),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_table(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    parse_table(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_comments_and_checks_width() {
        let t = parse_table("# t v\n0 1\n1\t2\n").unwrap();
        assert_eq!(t, vec![vec![0.0, 1.0], vec![1.0, 2.0]]);
        assert!(parse_table("0 1\n2\n").is_err());
        assert!(parse_table("0 x\n").is_err());
    }
}
