//! The model / learning rate / dev / test results table.

use std::fmt;

use crate::error::{Error, Result};
use crate::training::GridSearchResult;

pub const TABLE_COLUMNS: [&str; 4] = ["Model", "Lrate", "Dev", "Test"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub model: String,
    pub learning_rate: f64,
    /// Fractions in [0, 1]; rendered as percentages.
    pub dev_accuracy: f64,
    pub test_accuracy: f64,
}

impl ResultRow {
    pub fn from_grid(model: impl Into<String>, grid: &GridSearchResult, test_accuracy: f64) -> Self {
        Self {
            model: model.into(),
            learning_rate: grid.selected_rate(),
            dev_accuracy: grid.selected_dev_accuracy(),
            test_accuracy,
        }
    }

    fn cells(&self) -> [String; 4] {
        [
            self.model.clone(),
            format_rate(self.learning_rate),
            format_percent(self.dev_accuracy),
            format_percent(self.test_accuracy),
        ]
    }
}

impl fmt::Display for ResultRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.cells().join(" | "))
    }
}

/// `3e-5` style.
pub fn format_rate(rate: f64) -> String {
    format!("{rate:e}")
}

/// Fraction as a percentage with two decimals.
pub fn format_percent(fraction: f64) -> String {
    format!("{:.2}", fraction * 100.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultsTable {
    /// Header `model,lrate,dev,test`.
    pub csv: String,
    /// Columns padded to equal width, separated by ` | `.
    pub text: String,
}

pub fn render_results_table(rows: &[ResultRow]) -> Result<ResultsTable> {
    let cells: Vec<[String; 4]> = rows.iter().map(ResultRow::cells).collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "lrate", "dev", "test"])
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    for c in &cells {
        w.write_record(c).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?)
        .expect("csv output is UTF-8");

    let mut widths = TABLE_COLUMNS.map(str::len);
    for c in &cells {
        for (w, s) in widths.iter_mut().zip(c) {
            *w = (*w).max(s.chars().count());
        }
    }
    let line = |row: [&str; 4]| {
        let padded: Vec<String> = row
            .iter()
            .zip(widths)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect();
        padded.join(" | ").trim_end().to_string() + "\n"
    };
    let mut text = line(TABLE_COLUMNS);
    for c in &cells {
        text += &line([&c[0], &c[1], &c[2], &c[3]]);
    }
    Ok(ResultsTable { csv, text })
}
