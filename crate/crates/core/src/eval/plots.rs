//! Plot data (CSV) and SVG renderings of the per-class metrics, the
//! confusion matrix and the class-support histogram.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::metrics::{ClassificationReport, ConfusionMatrix};
use crate::corpus::{ClassList, SupportTable};
use crate::error::{Error, Result};

pub const METRICS_CSV: &str = "metrics.csv";
pub const CONFUSION_CSV: &str = "confusion.csv";
pub const SUPPORT_CSV: &str = "support.csv";
pub const FIGURES_DIR: &str = "figures";

#[derive(Serialize)]
struct MetricRow<'a> {
    class: &'a str,
    precision: f64,
    recall: f64,
    f1: f64,
    support: usize,
}

#[derive(Serialize)]
struct CellRow<'a> {
    true_label: &'a str,
    predicted_label: &'a str,
    count: usize,
    true_class_accuracy: f64,
    true_class_error_rate: f64,
}

#[derive(Serialize)]
struct SupportRow<'a> {
    class: &'a str,
    count: usize,
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn class_name(classes: &ClassList, i: usize) -> String {
    classes.name(i).map_or_else(|| i.to_string(), str::to_owned)
}

const BAR_COLORS: [&str; 3] = ["#4c72b0", "#dd8452", "#55a868"];

/// Grouped vertical bars, one group per label.
fn bar_chart(title: &str, labels: &[String], series: &[(&str, Vec<f64>)], y_max: f64) -> String {
    let group = 18.0 * series.len() as f64 + 14.0;
    let (left, top, height) = (60.0, 40.0, 260.0);
    let width = left + group * labels.len() as f64 + 20.0;
    let total_h = top + height + 110.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{total_h:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r##"<line x1="{left}" y1="{top}" x2="{left}" y2="{:.1}" stroke="#333"/>"##,
        top + height
    );
    for tick in 0..=4 {
        let v = y_max * tick as f64 / 4.0;
        let y = top + height - height * tick as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 4.0,
            y + 4.0,
            if y_max <= 1.0 { format!("{v:.2}") } else { format!("{v:.0}") }
        );
    }
    for (g, label) in labels.iter().enumerate() {
        let x0 = left + 7.0 + group * g as f64;
        for (k, (_, values)) in series.iter().enumerate() {
            let v = values[g];
            let h = if y_max > 0.0 { height * v / y_max } else { 0.0 };
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="16" height="{h:.1}" fill="{}"><title>{}: {v}</title></rect>"#,
                x0 + 18.0 * k as f64,
                top + height - h,
                BAR_COLORS[k % BAR_COLORS.len()],
                escape(label)
            );
        }
        let cx = x0 + 9.0 * series.len() as f64;
        let ly = top + height + 12.0;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{ly:.1}" text-anchor="end" transform="rotate(-45 {cx:.1} {ly:.1})">{}</text>"#,
            escape(label)
        );
    }
    if series.len() > 1 {
        for (k, (name, _)) in series.iter().enumerate() {
            let x = width - 90.0;
            let y = 12.0 + 14.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{y:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                BAR_COLORS[k % BAR_COLORS.len()],
                x + 14.0,
                y + 9.0,
                escape(name)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn heat_map(matrix: &ConfusionMatrix, classes: &ClassList) -> String {
    let n = matrix.num_classes();
    let cell = 40.0;
    let (left, top) = (110.0, 110.0);
    let width = left + cell * n as f64 + 150.0;
    let height = top + cell * n as f64 + 20.0;
    let max = matrix.counts.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<text x="10" y="20" font-size="14">Confusion matrix (rows: true, columns: predicted)</text>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}">accuracy / error</text>"#,
        left + cell * n as f64 + 8.0,
        top - 8.0
    );
    for i in 0..n {
        let name = escape(&class_name(classes, i));
        let y = top + cell * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{name}</text>"#,
            left - 6.0,
            y + cell / 2.0 + 4.0
        );
        let cx = left + cell * i as f64 + cell / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" transform="rotate(-60 {cx:.1} {:.1})">{name}</text>"#,
            top - 6.0,
            top - 6.0
        );
        for j in 0..n {
            let c = matrix.counts[i][j];
            let shade = c as f64 / max;
            let x = left + cell * j as f64;
            let _ = writeln!(
                s,
                r##"<rect x="{x:.1}" y="{y:.1}" width="{cell}" height="{cell}" fill="#08519c" fill-opacity="{shade:.3}" stroke="#ccc"/><text x="{:.1}" y="{:.1}" text-anchor="middle" fill="{}">{c}</text>"##,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                if shade > 0.5 { "#fff" } else { "#000" }
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{:.1}% / {:.1}%</text>"#,
            left + cell * n as f64 + 8.0,
            y + cell / 2.0 + 4.0,
            100.0 * matrix.class_accuracy(i),
            100.0 * matrix.class_error_rate(i)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `metrics.csv`, `confusion.csv` and `support.csv` into
/// `output_dir`, and an SVG of each under `figures/`. Returns the written
/// paths.
pub fn emit_plots(
    report: &ClassificationReport,
    matrix: &ConfusionMatrix,
    support: &SupportTable,
    classes: &ClassList,
    output_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let figures = output_dir.join(FIGURES_DIR);
    fs::create_dir_all(&figures).map_err(|e| Error::io(&figures, e))?;
    let n = matrix.num_classes();
    if report.per_class.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "report has {} classes, matrix {n}",
            report.per_class.len()
        )));
    }
    let names: Vec<String> = (0..n).map(|i| class_name(classes, i)).collect();
    let mut written = Vec::new();

    let path = output_dir.join(METRICS_CSV);
    write_csv(
        &path,
        report.per_class.iter().zip(&names).map(|(m, name)| MetricRow {
            class: name,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            support: m.support,
        }),
    )?;
    written.push(path);

    let path = output_dir.join(CONFUSION_CSV);
    write_csv(
        &path,
        (0..n).flat_map(|i| {
            let names = &names;
            (0..n).map(move |j| CellRow {
                true_label: &names[i],
                predicted_label: &names[j],
                count: matrix.counts[i][j],
                true_class_accuracy: matrix.class_accuracy(i),
                true_class_error_rate: matrix.class_error_rate(i),
            })
        }),
    )?;
    written.push(path);

    let path = output_dir.join(SUPPORT_CSV);
    write_csv(&path, support.rows.iter().map(|(class, count)| SupportRow { class, count: *count }))?;
    written.push(path);

    let metrics_svg = bar_chart(
        "Precision, recall and F1 per class",
        &names,
        &[
            ("precision", report.per_class.iter().map(|m| m.precision).collect()),
            ("recall", report.per_class.iter().map(|m| m.recall).collect()),
            ("f1", report.per_class.iter().map(|m| m.f1).collect()),
        ],
        1.0,
    );
    let support_labels: Vec<String> = support.rows.iter().map(|r| r.0.clone()).collect();
    let support_max = support.rows.iter().map(|r| r.1).max().unwrap_or(0) as f64;
    let support_svg = bar_chart(
        "Examples per class",
        &support_labels,
        &[("support", support.rows.iter().map(|r| r.1 as f64).collect())],
        support_max,
    );
    for (file, body) in [
        ("metrics.svg", metrics_svg),
        ("confusion.svg", heat_map(matrix, classes)),
        ("support.svg", support_svg),
    ] {
        let path = figures.join(file);
        write_text(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate;

    #[test]
    fn confusion_csv_has_one_row_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let (r, m) = evaluate(&[0, 1, 1, 1], &[0, 0, 1, 1], 2).unwrap();
        let classes = ClassList::new(["a", "b"]);
        let support = SupportTable::from_counts([("a", 2), ("b", 2)]);
        let files = emit_plots(&r, &m, &support, &classes, dir.path()).unwrap();
        assert_eq!(files.len(), 6);
        let text = fs::read_to_string(dir.path().join(CONFUSION_CSV)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4);
        assert_eq!(lines[1], "a,a,1,0.5,0.5");
        assert_eq!(lines[2], "a,b,1,0.5,0.5");
        assert_eq!(lines[3], "b,a,0,1.0,0.0");
        for f in &files[3..] {
            let svg = fs::read_to_string(f).unwrap();
            assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        }
    }

    #[test]
    fn unwritable_directory_errors() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let (r, m) = evaluate(&[0], &[0], 2).unwrap();
        let err = emit_plots(&r, &m, &SupportTable::default(), &ClassList::default(), &blocker);
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn labels_are_escaped() {
        let svg = bar_chart("t", &["a<b&c".into()], &[("s", vec![1.0])], 1.0);
        assert!(svg.contains("a&lt;b&amp;c") && !svg.contains("a<b"));
    }
}
