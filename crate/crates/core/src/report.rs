//! Result tables and their text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Cell::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }

    /// CSV field: floats use 17 significant digits in scientific form.
    fn csv(&self) -> String {
        match self {
            Cell::Bool(b) => b.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }
}

/// Round-trip formatting used by every numeric output.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Free-form description (operator, kind, method) carried into headers.
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl Table {
    pub fn new<S: Into<String>>(name: impl Into<String>, columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    /// Appends a row; panics when its width differs from the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn get(&self, row: usize, name: &str) -> Option<&Cell> {
        self.column(name).and_then(|c| self.rows.get(row).map(|r| &r[c]))
    }

    pub fn float(&self, row: usize, name: &str) -> Option<f64> {
        self.get(row, name).and_then(Cell::as_f64)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tables serialise");
        s.push('\n');
        s
    }

    /// Two-column `(x, value)` blocks, one per bracket end (or per numeric
    /// column when the table has no bracket), separated by blank lines.
    /// The header names the table, its metadata and each block's column.
    pub fn to_plotdata(&self) -> String {
        let x = self.column("n").or_else(|| self.column("d")).unwrap_or(0);
        let series: Vec<usize> = match (self.column("lower"), self.column("upper")) {
            (Some(l), Some(u)) => vec![l, u],
            _ => {
                (0..self.columns.len()).filter(|&c| c != x && self.rows.iter().all(|r| matches!(r[c], Cell::Float(_)))).collect()
            }
        };
        let mut out = String::new();
        let _ = writeln!(out, "# table: {}", self.name);
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}: {v}");
        }
        if let Some(m) = self.column("method") {
            let methods: Vec<&str> = self.rows.iter().filter_map(|r| r[m].as_str()).collect();
            let mut uniq = methods.clone();
            uniq.dedup();
            let _ = writeln!(out, "# method: {}", uniq.join(" "));
        }
        for (b, &c) in series.iter().enumerate() {
            if b > 0 {
                out.push_str("\n\n");
            }
            let _ = writeln!(out, "# block {b}: {} {}", self.columns[x], self.columns[c]);
            for row in &self.rows {
                let xv = row[x].as_f64().map(format_float).unwrap_or_else(|| row[x].csv());
                let yv = row[c].as_f64().map(format_float).unwrap_or_else(|| row[c].csv());
                let _ = writeln!(out, "{xv} {yv}");
            }
        }
        out
    }
}
