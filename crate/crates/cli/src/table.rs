//! Plot-ready tab-separated tables.
//!
//! Every table starts with `#` lines: a title, optional notes, and a final
//! header naming each column with its unit in brackets. Values are written
//! with 17 significant digits; columns with unit `index` are integers.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    title: String,
    notes: Vec<String>,
    columns: Vec<(String, String)>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: &[(&str, &str)]) -> Self {
        Self {
            title: title.into(),
            notes: Vec::new(),
            columns: columns.iter().map(|(n, u)| (n.to_string(), u.to_string())).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(title: impl Into<String>, columns: Vec<(String, String)>) -> Self {
        Self {
            title: title.into(),
            notes: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width for `{}`", self.title);
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# {}", self.title).unwrap();
        for n in &self.notes {
            writeln!(out, "# {n}").unwrap();
        }
        let header: Vec<String> = self.columns.iter().map(|(n, u)| format!("{n} [{u}]")).collect();
        writeln!(out, "# {}", header.join("\t")).unwrap();
        let index: Vec<bool> = self.columns.iter().map(|(_, u)| u == "index").collect();
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&index)
                .map(|(v, &i)| if i { format!("{}", *v as i64) } else { format!("{v:.16e}") })
                .collect();
            writeln!(out, "{}", cells.join("\t")).unwrap();
        }
        out
    }
}
