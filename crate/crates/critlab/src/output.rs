//! CSV tables, verdicts and number formatting shared by the runners.

use serde::Serialize;

/// 17 significant digits; `nan`, `inf` and `-inf` spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// A CSV file held in memory until the run finishes.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub file_name: String,
    pub header: &'static str,
    pub rows: Vec<String>,
}

impl CsvTable {
    pub fn new(file_name: impl Into<String>, header: &'static str) -> Self {
        Self { file_name: file_name.into(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.header.split(',').count());
        self.rows.push(fields.join(","));
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.header.len() + 1 + self.rows.iter().map(|r| r.len() + 1).sum::<usize>());
        out.push_str(self.header);
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

/// One acceptance threshold, evaluated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// What a runner hands back: tables to write, verdicts and summary numbers.
#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub tables: Vec<CsvTable>,
    pub verdicts: Vec<Verdict>,
    pub summary: serde_json::Map<String, serde_json::Value>,
}

impl ExperimentOutput {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn table(&self, file_name: &str) -> Option<&CsvTable> {
        self.tables.iter().find(|t| t.file_name == file_name)
    }
}
